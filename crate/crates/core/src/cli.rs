//! Batch front-end: reads a JSON input, runs one command and writes JSON
//! reports or CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use nalgebra::{DMatrix, Matrix2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::blender::{
    covering_criterion, perturbation_trials, product_blender, robustness_margin, tangency_witness,
    verify_superposition, AffineRepeller, Blender, BlenderSpec, Coords, DiskSpec, LinearFoliation, PlanarRepeller,
    SsDisk, TrigCurve,
};
use crate::cones::{check_cone_invariance, domination_time, uniform_rate_check, ConeField, LinearMap};
use crate::entropy::{entropy_gap, HorseshoeSpec};
use crate::geometry::BoxN;
use crate::local_model::experiments::{GraphDisk, Quadrature};
use crate::local_model::strip::ThetaPlanes;
use crate::local_model::{LocalTangencyModel, ModelSpec};
use crate::spectra::{classify_with, rotation_eigenvalues, saddle_node_angle, SpectraTolerances, SpectrumInput};
use crate::unfolding::{
    cycle_witness, find_saddles_default, index_variation_sweep, SweepConfig, UnfoldingParams, WitnessOptions,
};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Classify,
    Bifurcate,
    Strips,
    Volume,
    Diameter,
    UnfoldSweep,
    CycleWitness,
    BlenderCheck,
    BlenderProduct,
    Tangency,
    EntropyGap,
    Cones,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "blenderlab", version, about = "Tangencies, index variation and blenders")]
pub struct RunConfig {
    #[arg(long, value_enum)]
    pub command: Command,
    #[arg(long = "in")]
    pub input_path: PathBuf,
    #[arg(long = "out")]
    pub output_path: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Inline JSON object or path to one.
    #[arg(long)]
    pub tolerance_overrides: Option<String>,
}

/// Optional replacements for numerical tolerances.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub modulus_rel: Option<f64>,
    pub nonreal_rel: Option<f64>,
    pub unit_circle: Option<f64>,
    pub refine_tol: Option<f64>,
    pub witness_tol: Option<f64>,
}

impl ToleranceOverrides {
    fn spectra(&self) -> SpectraTolerances {
        let d = SpectraTolerances::default();
        SpectraTolerances {
            modulus_rel: self.modulus_rel.unwrap_or(d.modulus_rel),
            nonreal_rel: self.nonreal_rel.unwrap_or(d.nonreal_rel),
            unit_circle: self.unit_circle.unwrap_or(d.unit_circle),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Schema(String),
    Io(String),
    Domain(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) | CliError::Io(_) => 2,
            CliError::Domain(_) => 3,
        }
    }

    pub fn name(&self) -> String {
        match self {
            CliError::Schema(_) => "SchemaError".into(),
            CliError::Io(_) => "IoError".into(),
            CliError::Domain(e) => e.name(),
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Schema(m) | CliError::Io(m) => m.clone(),
            CliError::Domain(e) => e.to_string(),
        }
    }

    /// Single-line JSON for the diagnostic stream.
    pub fn to_json(&self) -> String {
        json!({"error": self.name(), "message": self.message(), "exit": self.exit_code()}).to_string()
    }
}

impl<E: Into<Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Domain(e.into())
    }
}

/// Files produced by a command with their contents.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub files: Vec<(PathBuf, String)>,
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn model_of(spec: &ModelSpec) -> Result<LocalTangencyModel, CliError> {
    Ok(LocalTangencyModel::from_spec(spec)?)
}

fn matrix_of(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(CliError::Schema("matrix must be a nonempty rectangular array".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Inclusive `k` range, defaulting to `k0 .. k0 + span`.
fn k_range(model: &LocalTangencyModel, k: Option<[usize; 2]>, span: usize) -> Result<Vec<usize>, CliError> {
    let [lo, hi] = match k {
        Some(r) => r,
        None => {
            let k0 = model.k0()?;
            [k0, k0 + span]
        }
    };
    Ok((lo..=hi).collect())
}

fn error_value(e: impl Into<Error>) -> Value {
    let e: Error = e.into();
    json!({"error": e.name(), "message": e.to_string()})
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BifurcateInput {
    matrix: [[f64; 2]; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StripsInput {
    model: ModelSpec,
    #[serde(default)]
    k: Option<[usize; 2]>,
    #[serde(default)]
    theta: Option<ThetaPlanes>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VolumeInput {
    model: ModelSpec,
    #[serde(default)]
    k: Option<[usize; 2]>,
    #[serde(default)]
    quadrature: Quadrature,
}

fn default_disks() -> usize {
    50
}

fn default_min_fraction() -> f64 {
    0.1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiameterInput {
    model: ModelSpec,
    #[serde(default)]
    k: Option<[usize; 2]>,
    #[serde(default = "default_disks")]
    disks: usize,
    #[serde(default = "default_min_fraction")]
    min_fraction: f64,
}

#[derive(Deserialize)]
struct SweepInput {
    model: ModelSpec,
    #[serde(flatten)]
    sweep: SweepConfig,
}

fn default_max_rounds() -> usize {
    50
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessInput {
    model: ModelSpec,
    params: UnfoldingParams,
    k: usize,
    theta: ThetaPlanes,
    #[serde(default)]
    j: usize,
    #[serde(default = "default_max_rounds")]
    max_rounds: usize,
    #[serde(default)]
    options: WitnessOptions,
}

fn default_depth() -> usize {
    40
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbationInput {
    trials: usize,
    /// Perturbation size as a fraction of `eps0`.
    fraction: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlenderCheckInput {
    blender: BlenderSpec,
    #[serde(default)]
    disks: Vec<DiskSpec>,
    #[serde(default = "default_depth")]
    depth: usize,
    #[serde(default)]
    perturbation: Option<PerturbationInput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductInput {
    repeller: AffineRepeller,
    gamma: f64,
    ss_dim: usize,
    resolution: f64,
    #[serde(default)]
    disks: Vec<DiskSpec>,
}

fn default_samples() -> usize {
    65536
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TangencyInput {
    #[serde(default)]
    curve: Option<TrigCurve>,
    /// Degree of a random curve drawn from the run seed.
    #[serde(default)]
    random_degree: Option<usize>,
    foliation: LinearFoliation,
    #[serde(default = "default_samples")]
    samples: usize,
}

fn default_resolution() -> usize {
    5
}

fn default_horizon() -> usize {
    64
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConesInput {
    matrix: Vec<Vec<f64>>,
    cone: ConeField,
    #[serde(default)]
    domain: Option<BoxN>,
    #[serde(default = "default_resolution")]
    resolution: usize,
    #[serde(default = "default_horizon")]
    horizon: usize,
}

fn classify(text: &str, tol: &ToleranceOverrides) -> Result<String, CliError> {
    let input: SpectrumInput = parse(text)?;
    Ok(pretty(&classify_with(&input.complex(), input.u_index, &tol.spectra())?))
}

fn bifurcate(text: &str) -> Result<String, CliError> {
    let input: BifurcateInput = parse(text)?;
    let [[a, b], [c, d]] = input.matrix;
    let m = Matrix2::new(a, b, c, d);
    let angle = saddle_node_angle(&m)?;
    let (z1, z2) = rotation_eigenvalues(&m, angle);
    Ok(pretty(&json!({
        "angle": angle,
        "eigenvalues_at_angle": [[z1.re, z1.im], [z2.re, z2.im]],
    })))
}

fn strips(text: &str) -> Result<String, CliError> {
    let input: StripsInput = parse(text)?;
    let model = model_of(&input.model)?;
    let k0 = model.k0()?;
    let gamma = model.classification()?.gamma;
    let ks = k_range(&model, input.k, 15)?;
    let rows: Vec<Value> = ks
        .iter()
        .map(|&k| {
            let s = model.strip(k)?;
            let du = s.diam_u(&model);
            Ok(json!({
                "k": k,
                "diam_u": du,
                "diam_u_scaled": du * gamma.powi(k as i32),
                "diam_c": s.diam_c(&model),
                "box_plus": s.box_plus,
            }))
        })
        .collect::<Result<_, CliError>>()?;
    let resized: Option<Vec<Value>> = match &input.theta {
        None => None,
        Some(theta) => Some(
            (0..theta.pairs.len())
                .flat_map(|j| ks.iter().map(move |&k| (j, k)))
                .map(|(j, k)| match model.resized_strip(j, k, theta) {
                    Ok(s) => json!({
                        "j": j,
                        "k": k,
                        "diam_c": s.diam_c(&model),
                        "rho": theta.rho,
                        "ok": s.diam_c(&model) > theta.rho,
                        "quantifier_margin": s.quantifier_margin,
                    }),
                    Err(e) => json!({"j": j, "k": k, "ok": false, "failure": error_value(e)}),
                })
                .collect(),
        ),
    };
    Ok(pretty(&json!({
        "k0": k0,
        "calibration": model.calibration,
        "generic": model.check_generic_conditions(),
        "strips": rows,
        "resized": resized,
    })))
}

/// Least-squares slope of `log ratio` against `k`.
pub fn log_slope(ks: &[usize], ratios: &[f64]) -> f64 {
    let n = ks.len() as f64;
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn volume(text: &str, out: &Path) -> Result<Outputs, CliError> {
    let input: VolumeInput = parse(text)?;
    let model = model_of(&input.model)?;
    let ks = k_range(&model, input.k, 10)?;
    let reports = ks
        .iter()
        .map(|&k| {
            let disk = GraphDisk::flat_over(&model, &model.strip(k)?);
            Ok(model.volume_expansion_experiment(k, &disk, input.quadrature)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let ratios: Vec<f64> = reports.iter().map(|r| r.ratio).collect();
    let slope = if ks.len() >= 2 { Some(log_slope(&ks, &ratios)) } else { None };
    let mut csv = String::from("k,ratio,bound,ok\n");
    for r in &reports {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.k,
            crate::unfolding::sweep::fmt_f64(r.ratio),
            crate::unfolding::sweep::fmt_f64(r.bound),
            r.bound_ok
        ));
    }
    let report = json!({
        "leading_jacobian": model.leading_jacobian(),
        "log_leading_jacobian": model.leading_jacobian().ln(),
        "slope": slope,
        "ok": reports.iter().all(|r| r.bound_ok),
        "rows": reports,
    });
    Ok(Outputs {
        files: vec![(out.to_path_buf(), pretty(&report)), (sibling(out, ".csv"), csv)],
    })
}

fn diameter(text: &str, seed: u64) -> Result<String, CliError> {
    let input: DiameterInput = parse(text)?;
    let model = model_of(&input.model)?;
    let ks = k_range(&model, input.k, 10)?;
    let per_k = ks
        .par_iter()
        .map(|&k| {
            let strip = model.strip(k)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            (0..input.disks)
                .map(|_| {
                    let d = GraphDisk::random_in(&model, &strip, input.min_fraction, &mut rng);
                    Ok(model.diameter_experiment(k, &d)?)
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let rows: Vec<_> = per_k.into_iter().flatten().collect();
    let violations = rows.iter().filter(|r| !r.ok).count();
    Ok(pretty(&json!({
        "ok": violations == 0,
        "violations": violations,
        "rows": rows,
    })))
}

fn unfold_sweep(text: &str, out: &Path, tol: &ToleranceOverrides) -> Result<Outputs, CliError> {
    let input: SweepInput = parse(text)?;
    let model = model_of(&input.model)?;
    let mut cfg = input.sweep;
    if let Some(t) = tol.refine_tol {
        cfg.refine_tol = t;
    }
    let result = index_variation_sweep(&model, &cfg)?;
    Ok(Outputs {
        files: vec![
            (out.to_path_buf(), result.to_csv(&model.dims.coordinate_names())),
            (sibling(out, ".summary.json"), pretty(&json!({"summary": result.summary}))),
        ],
    })
}

fn witness(text: &str, tol: &ToleranceOverrides) -> Result<String, CliError> {
    let input: WitnessInput = parse(text)?;
    let model = model_of(&input.model)?;
    let mut opts = input.options;
    if let Some(t) = tol.witness_tol {
        opts.tol = t;
    }
    model.resized_strip(input.j, input.k, &input.theta)?;
    let search = find_saddles_default(&model, &input.params, input.k)?;
    let rows: Vec<Value> = search
        .saddles
        .iter()
        .filter(|s| s.u_index >= 2)
        .map(|s| {
            let w = cycle_witness(
                &model,
                &input.params,
                input.k,
                s,
                &input.theta,
                input.j,
                input.max_rounds,
                &opts,
            );
            match w {
                Ok(w) => json!({"saddle": s, "ok": true, "witness": w}),
                Err(e) => json!({"saddle": s, "ok": false, "failure": error_value(e)}),
            }
        })
        .collect();
    Ok(pretty(&json!({
        "params": input.params,
        "k": input.k,
        "saddles": search.saddles.len(),
        "ok": !rows.is_empty() && rows.iter().all(|r| r["ok"] == json!(true)),
        "witnesses": rows,
    })))
}

fn superposition_value(b: &Blender, spec: &DiskSpec, depth: usize) -> Value {
    match SsDisk::from_spec(spec, b) {
        Err(e) => json!({"disk": spec, "ok": false, "failure": error_value(e)}),
        Ok(d) => match verify_superposition(b, &d, depth) {
            Ok(w) => json!({"disk": spec, "ok": true, "witness": w}),
            Err(e) => json!({"disk": spec, "ok": false, "failure": error_value(e)}),
        },
    }
}

fn blender_check(text: &str, seed: u64) -> Result<String, CliError> {
    let input: BlenderCheckInput = parse(text)?;
    let b = Blender::from_spec(&input.blender)?;
    let cov = covering_criterion(&b);
    let rob = robustness_margin(&b);
    let disks = if input.disks.is_empty() {
        vec![DiskSpec::VerticalAt(Coords::Many(b.central_box().center().iter().cloned().collect()))]
    } else {
        input.disks
    };
    let witnesses: Vec<Value> = disks.iter().map(|d| superposition_value(&b, d, input.depth)).collect();
    let trials = input
        .perturbation
        .map(|p| perturbation_trials(&b, p.fraction * rob.eps0, p.trials, seed, &[0.1, 0.5, 0.9], input.depth));
    let all_witnessed = witnesses.iter().all(|w| w["ok"] == json!(true));
    Ok(pretty(&json!({
        "ok": cov.ok && all_witnessed,
        "margin": cov.margin,
        "covering": cov,
        "robustness": rob,
        "superposition": witnesses,
        "perturbation_trials": trials,
    })))
}

fn blender_product(text: &str) -> Result<String, CliError> {
    let input: ProductInput = parse(text)?;
    let pb = product_blender(&input.repeller, input.gamma, input.ss_dim, input.resolution)?;
    let b = &pb.blender;
    let disks = if input.disks.is_empty() {
        vec![DiskSpec::VerticalAt(Coords::One(0.5))]
    } else {
        input.disks
    };
    let slices: Vec<Value> = disks
        .iter()
        .map(|spec| match SsDisk::from_spec(spec, b) {
            Ok(d) => json!({"disk": spec, "ok": true, "witness": pb.slice_witness(&d)}),
            Err(e) => json!({"disk": spec, "ok": false, "failure": error_value(e)}),
        })
        .collect();
    Ok(pretty(&json!({
        "ok": slices.iter().all(|s| s["ok"] == json!(true)),
        "min_rate": input.repeller.min_rate(),
        "lamination_gap": input.repeller.lamination_gap(input.resolution),
        "distinctive": b.distinctive,
        "covering": covering_criterion(b),
        "slices": slices,
    })))
}

fn tangency(text: &str, seed: u64) -> Result<String, CliError> {
    let input: TangencyInput = parse(text)?;
    let curve = match (input.curve, input.random_degree) {
        (Some(c), None) => c,
        (None, Some(d)) => TrigCurve::random(seed, d),
        _ => return Err(CliError::Schema("give exactly one of curve and random_degree".into())),
    };
    let params = tangency_witness(&curve, &input.foliation, input.samples)?;
    Ok(pretty(&json!({
        "count": params.len(),
        "params": params,
        "curve": curve,
    })))
}

fn entropy(text: &str) -> Result<String, CliError> {
    let input: HorseshoeSpec = parse(text)?;
    Ok(pretty(&entropy_gap(&input)?))
}

fn cones(text: &str) -> Result<String, CliError> {
    let input: ConesInput = parse(text)?;
    let l = matrix_of(&input.matrix)?;
    if l.nrows() != l.ncols() {
        return Err(CliError::Schema("matrix must be square".into()));
    }
    let dim = l.nrows();
    input.cone.validate(dim)?;
    let domain = input.domain.unwrap_or_else(|| BoxN::new(vec![-1.0; dim], vec![1.0; dim]));
    let dom = match domination_time(&l, &input.cone.e, &input.cone.f) {
        Ok(n) => json!(n),
        Err(e) => error_value(e),
    };
    let inv = check_cone_invariance(&LinearMap(l.clone()), &input.cone, &domain, input.resolution)?;
    let e_block = DMatrix::from_fn(input.cone.e.len(), input.cone.e.len(), |i, j| {
        l[(input.cone.e[i], input.cone.e[j])]
    });
    let rate = match uniform_rate_check(&e_block, input.horizon) {
        Ok(r) => serde_json::to_value(r).expect("rate report serializes"),
        Err(e) => error_value(e),
    };
    Ok(pretty(&json!({
        "ok": inv.ok,
        "worst_margin": inv.worst_margin,
        "skipped": inv.skipped,
        "cone_invariance": inv,
        "domination_time": dom,
        "e_rate": rate,
    })))
}

/// Runs one command on the input text and returns the files to write.
pub fn execute(
    command: Command,
    text: &str,
    out: &Path,
    seed: u64,
    tol: &ToleranceOverrides,
) -> Result<Outputs, CliError> {
    let single = |s: String| Outputs {
        files: vec![(out.to_path_buf(), s)],
    };
    match command {
        Command::Classify => classify(text, tol).map(single),
        Command::Bifurcate => bifurcate(text).map(single),
        Command::Strips => strips(text).map(single),
        Command::Volume => volume(text, out),
        Command::Diameter => diameter(text, seed).map(single),
        Command::UnfoldSweep => unfold_sweep(text, out, tol),
        Command::CycleWitness => witness(text, tol).map(single),
        Command::BlenderCheck => blender_check(text, seed).map(single),
        Command::BlenderProduct => blender_product(text).map(single),
        Command::Tangency => tangency(text, seed).map(single),
        Command::EntropyGap => entropy(text).map(single),
        Command::Cones => cones(text).map(single),
    }
}

fn overrides(arg: &Option<String>) -> Result<ToleranceOverrides, CliError> {
    match arg {
        None => Ok(ToleranceOverrides::default()),
        Some(s) if s.trim_start().starts_with('{') => parse(s),
        Some(path) => parse(&fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?),
    }
}

fn run_inner(cfg: &RunConfig) -> Result<(), CliError> {
    let tol = overrides(&cfg.tolerance_overrides)?;
    let text = fs::read_to_string(&cfg.input_path)
        .map_err(|e| CliError::Io(format!("{}: {e}", cfg.input_path.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.max(1))
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    log::info!("running {:?} on {}", cfg.command, cfg.input_path.display());
    let outputs = pool.install(|| execute(cfg.command, &text, &cfg.output_path, cfg.seed, &tol))?;
    for (path, body) in outputs.files {
        log::debug!("writing {}", path.display());
        fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Runs the command and returns the process exit status; errors go to
/// standard error as one JSON line.
pub fn run(cfg: &RunConfig) -> i32 {
    match run_inner(cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
