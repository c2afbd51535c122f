//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::{Path, PathBuf};
use std::time::Instant;

use blenderlab::blender::{
    perturbation_trials, robustness_margin, tangency_witness, verify_superposition, BlenderError, ClosedCurve,
    Coords, DiskSpec, LinearFoliation, SsDisk, TrigCurve,
};
use blenderlab::cli::{run, Command, RunConfig};
use blenderlab::cones::{check_cone_invariance, domination_time, LinearMap};
use blenderlab::entropy::{entropy_gap, HorseshoeSpec};
use blenderlab::geometry::BoxN;
use blenderlab::local_model::experiments::{GraphDisk, Quadrature};
use blenderlab::local_model::LocalTangencyModel;
use blenderlab::presets;
use blenderlab::spectra::{rotation_eigenvalues, saddle_node_angle};
use blenderlab::unfolding::{cycle_witness, find_saddles_default, index_variation_sweep, UnfoldingParams, WitnessOptions};
use nalgebra::{DMatrix, Matrix2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion(n: usize, name: &str, budget: f64, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let out = f();
    let secs = start.elapsed().as_secs_f64();
    let (pass, detail) = match out {
        Ok(d) if secs < budget => (true, d),
        Ok(d) => (false, format!("{d}; over the {budget} s budget")),
        Err(e) => (false, e),
    };
    println!(
        "criterion {n:>2} {name:<24} {} ({detail}; {secs:.2} s)",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn saddle_node() -> Check {
    let a = Matrix2::new(2.0, 0.0, 0.0, 0.5);
    let phi = saddle_node_angle(&a).map_err(|e| e.to_string())?;
    // trace of R_phi diag(2, 0.5) is 2.5 cos(phi), determinant 1
    let oracle = bisect(|p| (2.5 * p.cos()).powi(2) - 4.0, 0.0, FRAC_PI_2);
    ensure((phi - oracle).abs() < 1e-10, || format!("angle {phi} vs oracle {oracle}"))?;
    ensure((phi - 0.8f64.acos()).abs() < 1e-10, || format!("angle {phi} vs arccos 0.8"))?;
    for d in [1e-3, 1e-2, 0.1] {
        let (z1, z2) = rotation_eigenvalues(&a, phi - d);
        ensure(z1.im == 0.0 && z2.im == 0.0 && z1.re != z2.re, || format!("not real distinct below at {d}"))?;
        let (z1, z2) = rotation_eigenvalues(&a, phi + d);
        ensure(z1.im != 0.0 && z2.im != 0.0, || format!("not nonreal above at {d}"))?;
    }
    Ok(format!("angle {phi:.15}, |angle - oracle| = {:.1e}", (phi - oracle).abs()))
}

fn gamma_two_model() -> LocalTangencyModel {
    let mut spec = presets::de1_spec();
    spec.c = vec![vec![2.0]];
    LocalTangencyModel::from_spec(&spec).expect("model is valid")
}

fn strip_scaling() -> Check {
    let m = gamma_two_model();
    let theta = presets::de1_theta();
    let k0 = m.k0().map_err(|e| e.to_string())?;
    let mut scaled = Vec::new();
    let mut min_c = f64::INFINITY;
    for k in k0..=k0 + 15 {
        let s = m.strip(k).map_err(|e| e.to_string())?;
        scaled.push(s.diam_u(&m) * 2f64.powi(k as i32));
        let r = m.resized_strip(0, k, &theta).map_err(|e| e.to_string())?;
        min_c = min_c.min(r.diam_c(&m));
    }
    let spread = scaled.iter().map(|x| (x - scaled[0]).abs() / scaled[0]).fold(0.0, f64::max);
    ensure(spread < 1e-12, || format!("diam_u 2^k varies by {spread:e}"))?;
    ensure(min_c > theta.rho, || format!("diam_c {min_c} <= rho {}", theta.rho))?;
    Ok(format!(
        "k0 = {k0}, diam_u 2^k = {:.6}, relative spread {spread:.1e}, min diam_c {min_c:.3} > rho {}",
        scaled[0], theta.rho
    ))
}

fn volume() -> Check {
    let m = presets::volume_model(0.9, 2.0);
    let k0 = m.k0().map_err(|e| e.to_string())?;
    let ks: Vec<usize> = (k0..=k0 + 10).collect();
    let mut logs = Vec::new();
    for &k in &ks {
        let disk = GraphDisk::flat_over(&m, &m.strip(k).map_err(|e| e.to_string())?);
        let r = m
            .volume_expansion_experiment(k, &disk, Quadrature::default())
            .map_err(|e| e.to_string())?;
        ensure(r.bound_ok && r.ratio > r.l_used * 1.8f64.powi(k as i32), || {
            format!("bound fails at k = {k}: {r:?}")
        })?;
        logs.push(r.ratio.ln());
    }
    let n = ks.len() as f64;
    let mx = ks.iter().map(|&k| k as f64).sum::<f64>() / n;
    let my = logs.iter().sum::<f64>() / n;
    let sxy: f64 = ks.iter().zip(&logs).map(|(&k, y)| (k as f64 - mx) * (y - my)).sum();
    let sxx: f64 = ks.iter().map(|&k| (k as f64 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    ensure((slope - 1.8f64.ln()).abs() < 1e-2, || format!("slope {slope} vs log 1.8"))?;
    Ok(format!("slope {slope:.6} vs log 1.8 = {:.6}, bound holds for k in [{k0}, {}]", 1.8f64.ln(), k0 + 10))
}

fn diameter() -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for m in [presets::de1_model(), presets::volume_model(0.9, 2.0), gamma_two_model()] {
        let k0 = m.k0().map_err(|e| e.to_string())?;
        let gamma = m.c[(0, 0)];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for k in k0..=k0 + 10 {
            let strip = m.strip(k).map_err(|e| e.to_string())?;
            for _ in 0..50 {
                let d = GraphDisk::random_in(&m, &strip, 0.1, &mut rng);
                let r = m.diameter_experiment(k, &d).map_err(|e| e.to_string())?;
                let bound = m.calibration.k * gamma.powi(k as i32) * r.diam_u;
                ensure(r.ok && r.diam_c_out < bound, || format!("violation at k = {k}: {r:?}"))?;
                worst = worst.max(r.diam_c_out / bound);
                count += 1;
            }
        }
    }
    Ok(format!("{count} disks, largest diam_c / (K gamma^k diam_u) = {worst:.4}"))
}

/// Index-two window of the shipped codimension-one model: with
/// `Y = gamma^k y` fixed points solve `(Y - 1)^2 + e Y + t = 0`,
/// `e = lambda^k - gamma^-k`, and the branch `|Y - 1| < e / 2` has index two.
fn window_oracle(k: usize) -> [f64; 2] {
    let e = 0.5f64.powi(k as i32) - 3f64.powi(-(k as i32));
    [-e - 0.75 * e * e, -e + 0.25 * e * e]
}

struct Found {
    k: usize,
    t: f64,
}

fn index_variation(found: &mut Vec<Found>) -> Check {
    let m = presets::de1_model();
    let cfg = presets::de1_sweep();
    let r = index_variation_sweep(&m, &cfg).map_err(|e| e.to_string())?;
    let mut widths = Vec::new();
    let mut worst_res: f64 = 0.0;
    let mut worst_edge: f64 = 0.0;
    for k in cfg.k[0]..=cfg.k[1] {
        let w = r.windows(k, 2);
        ensure(w.len() == 1, || format!("k = {k}: {} index-two windows", w.len()))?;
        let [lo, hi] = window_oracle(k);
        worst_edge = worst_edge.max((w[0].t_lo - lo).abs()).max((w[0].t_hi - hi).abs());
        widths.push(w[0].width);
        found.push(Found { k, t: 0.5 * (lo + hi) });
    }
    for row in r.rows.iter().filter(|r| r.u_index == 2) {
        worst_res = worst_res.max(row.residual);
    }
    ensure(worst_res < 1e-10, || format!("residual {worst_res:e}"))?;
    ensure(worst_edge < 1e-9, || format!("window edges off the oracle by {worst_edge:e}"))?;
    let ratios: Vec<f64> = widths.windows(2).map(|w| w[1] / w[0]).collect();
    let (lo, hi) = (0.5 / 3.0, 2.0 / 3.0);
    ensure(ratios.iter().all(|&q| lo <= q && q <= hi), || format!("width ratios {ratios:?}"))?;
    Ok(format!(
        "{} consecutive k, max residual {worst_res:.1e}, edges within {worst_edge:.1e} of the oracle, width ratios {}",
        widths.len(),
        ratios.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>().join(" ")
    ))
}

fn cycle_witnesses(found: &[Found]) -> Check {
    ensure(!found.is_empty(), || "no saddles from the index-variation sweep".into())?;
    let m = presets::de1_model();
    let theta = presets::de1_theta();
    let kd = m.calibration.k * theta.delta(0);
    ensure(kd < theta.rho / 10.0, || format!("K delta = {kd} is not below rho / 10"))?;
    let mut m0s = Vec::new();
    for f in found {
        let params = UnfoldingParams { t: f.t, ..Default::default() };
        let s = find_saddles_default(&m, &params, f.k).map_err(|e| e.to_string())?;
        let saddle = s
            .saddles
            .iter()
            .find(|s| s.u_index == 2)
            .ok_or_else(|| format!("no index-two saddle at k = {}", f.k))?;
        let w = cycle_witness(&m, &params, f.k, saddle, &theta, 0, 50, &WitnessOptions::default())
            .map_err(|e| format!("k = {}: {e}", f.k))?;
        ensure(w.m0 <= 50, || format!("m0 = {}", w.m0))?;
        ensure(w.residual < 1e-10, || format!("k = {}: residual {:e}", f.k, w.residual))?;
        ensure(w.bracket[0] * w.bracket[1] <= 0.0, || format!("bracket {:?} has no sign change", w.bracket))?;
        m0s.push(w.m0);
    }
    Ok(format!("m0 = {m0s:?}, K delta = {kd:.4} < rho / 10"))
}

/// Lowest-first depth-first search over itineraries whose backward central
/// orbit stays in `[lo, hi]`.
fn dfs(x: f64, depth: usize, maps: &[(f64, f64)], lo: f64, hi: f64, path: &mut Vec<usize>) -> bool {
    if path.len() == depth {
        return true;
    }
    for (i, &(a, b)) in maps.iter().enumerate() {
        let (ilo, ihi) = ((a * lo + b).max(lo), (a * hi + b).min(hi));
        if x < ilo - 1e-12 || x > ihi + 1e-12 {
            continue;
        }
        path.push(i);
        if dfs((x - b) / a, depth, maps, lo, hi, path) {
            return true;
        }
        path.pop();
    }
    false
}

fn superposition() -> Check {
    let depth = 40;
    let mut worst_match: f64 = 0.0;
    for seed in 0..20 {
        let b = presets::random_covering_pair(seed);
        let spec = b.to_spec();
        let maps: Vec<(f64, f64)> = spec
            .branches
            .iter()
            .map(|br| (br.linear.central[0][0], br.offset[1]))
            .collect();
        let (lo, hi) = (spec.reference.lo[1], spec.reference.hi[1]);
        let a_max = maps.iter().map(|m| m.0).fold(0.0, f64::max);
        for c in [0.2, 0.5, 0.8] {
            let disk = SsDisk::from_spec(&DiskSpec::VerticalAt(Coords::One(c)), &b).map_err(|e| e.to_string())?;
            let w = verify_superposition(&b, &disk, depth).map_err(|e| format!("seed {seed}: {e}"))?;
            let bound = a_max.powi(depth as i32) * spec.reference.diameter();
            ensure(w.residual <= bound, || format!("seed {seed}: residual {} > {bound}", w.residual))?;
            let mut path = Vec::new();
            ensure(dfs(c, depth, &maps, lo, hi, &mut path), || format!("seed {seed}: oracle finds no itinerary"))?;
            ensure(path == w.itinerary, || format!("seed {seed}: itinerary differs from the oracle"))?;
            let mut ss = 0.0;
            for &i in path.iter().rev() {
                ss = spec.branches[i].linear.ss[0][0] * ss + spec.branches[i].offset[0];
            }
            let uu = b.distinctive_saddle()[2];
            let d = (w.point[0] - ss).abs().max((w.point[1] - c).abs()).max((w.point[2] - uu).abs());
            ensure(d < 1e-6, || format!("seed {seed}: witness off the oracle by {d}"))?;
            worst_match = worst_match.max(d);
        }
    }
    for seed in 0..10 {
        let (b, mid) = presets::random_gap_pair(seed);
        let disk = SsDisk::from_spec(&DiskSpec::VerticalAt(Coords::One(mid)), &b).map_err(|e| e.to_string())?;
        match verify_superposition(&b, &disk, depth) {
            Err(BlenderError::CoverageGap { .. }) => {}
            other => return Err(format!("gap seed {seed}: {other:?}")),
        }
    }
    let b = presets::random_covering_pair(0);
    let rob = robustness_margin(&b);
    ensure(rob.eps0 > 0.0, || "eps0 is zero".into())?;
    let trials = perturbation_trials(&b, 0.5 * rob.eps0, 20, 11, &[0.1, 0.5, 0.9], depth);
    let passed = trials.iter().filter(|t| t.covering_ok && t.superposition_ok).count();
    ensure(passed == 20, || format!("{passed} of 20 perturbations pass"))?;
    Ok(format!(
        "60 witnesses within {worst_match:.1e} of the oracle, 10 gaps detected, 20/20 perturbations at eps0/2 = {:.2e}",
        0.5 * rob.eps0
    ))
}

fn horseshoe(rates: [f64; 3]) -> HorseshoeSpec {
    HorseshoeSpec {
        matrix: vec![vec![1, 1], vec![1, 1]],
        rates: vec![rates.to_vec(), rates.to_vec()],
        m: 2,
        n: 1,
        r: 2.0,
    }
}

fn entropy() -> Check {
    let h = 2f64.ln();
    let r = 2.0;
    let cases = [
        ([0.9, 0.8, 4.0], true, 0.30216, 1.03972, false),
        ([0.25, 1.0 / 3.0, 4.0], false, 2.21026, 1.03972, false),
        ([0.9, 0.8, 1.5], true, 0.30216, 0.30410, true),
    ];
    let mut out = Vec::new();
    for (rates, cs_ok, cs_literal, cu_literal, cu_ok) in cases {
        let rep = entropy_gap(&horseshoe(rates)).map_err(|e| e.to_string())?;
        let cs = -(rates[0] * rates[1]).ln() + rates[0].max(rates[1]).ln() / (2.0 * r);
        let cu = rates[2].ln() - rates[2].ln() / (2.0 * r);
        ensure((rep.h_top - h).abs() < 1e-12, || format!("h_top {}", rep.h_top))?;
        ensure((rep.threshold_cs - cs).abs() < 1e-6 && (cs - cs_literal).abs() < 1e-5, || {
            format!("threshold_cs {} vs {cs}", rep.threshold_cs)
        })?;
        ensure((rep.threshold_cu - cu).abs() < 1e-6 && (cu - cu_literal).abs() < 1e-5, || {
            format!("threshold_cu {} vs {cu}", rep.threshold_cu)
        })?;
        ensure(rep.cs_ok == cs_ok && rep.cu_ok == cu_ok, || format!("flags {rep:?}"))?;
        out.push(format!("cs {:.5} cu {:.5}", rep.threshold_cs, rep.threshold_cu));
    }
    Ok(out.join(", "))
}

fn domination() -> Check {
    let l = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.9, 1.0]));
    let t = domination_time(&l, &[0], &[1]).map_err(|e| e.to_string())?;
    let oracle = (1..).find(|&n| 0.9f64.powi(n) < 0.5).unwrap() as usize;
    ensure(t == oracle && t == 7, || format!("domination time {t}, oracle {oracle}"))?;
    let cone = blenderlab::cones::ConeField {
        e: vec![0],
        f: vec![1],
        half_angle: FRAC_PI_4,
    };
    let dom = BoxN::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
    let hyp = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 2.0]));
    let a = check_cone_invariance(&LinearMap(hyp), &cone, &dom, 5).map_err(|e| e.to_string())?;
    let id = check_cone_invariance(&LinearMap(DMatrix::identity(2, 2)), &cone, &dom, 5).map_err(|e| e.to_string())?;
    ensure(a.ok && a.worst_margin > 0.0, || format!("hyperbolic margin {}", a.worst_margin))?;
    ensure(id.worst_margin == 0.0, || format!("identity margin {}", id.worst_margin))?;
    Ok(format!(
        "domination time {t}, margin {:.4} for diag(0.5, 2), {} for the identity",
        a.worst_margin, id.worst_margin
    ))
}

/// Parameters where the height of the curve has a strict local extremum on
/// a uniform grid.
fn dense_extrema(c: &TrigCurve, n: usize) -> Vec<f64> {
    let z: Vec<f64> = (0..n).map(|i| c.point(2.0 * PI * i as f64 / n as f64)[1]).collect();
    (0..n)
        .filter(|&i| {
            let (p, q) = (z[(i + n - 1) % n], z[(i + 1) % n]);
            (z[i] > p && z[i] >= q) || (z[i] < p && z[i] <= q)
        })
        .map(|i| 2.0 * PI * i as f64 / n as f64)
        .collect()
}

fn tangency() -> Check {
    let fol = LinearFoliation { normal: [0.0, 1.0] };
    let t = tangency_witness(&TrigCurve::circle(), &fol, 65536).map_err(|e| e.to_string())?;
    ensure(t.len() == 2, || format!("circle gives {t:?}"))?;
    ensure((t[0] - FRAC_PI_2).abs() < 1e-10 && (t[1] - 1.5 * PI).abs() < 1e-10, || {
        format!("circle gives {t:?}")
    })?;
    let mut counts = Vec::new();
    for seed in 0..10 {
        let c = TrigCurve::random(seed, 4);
        let w = tangency_witness(&c, &fol, 65536).map_err(|e| e.to_string())?;
        let o = dense_extrema(&c, 1 << 18);
        ensure(w.len() >= 2 && w.len() % 2 == 0 && w.len() == o.len(), || {
            format!("seed {seed}: {} witnesses, {} oracle extrema", w.len(), o.len())
        })?;
        for (a, b) in w.iter().zip(&o) {
            ensure((a - b).abs() < 1e-4, || format!("seed {seed}: {a} vs {b}"))?;
        }
        counts.push(w.len());
    }
    Ok(format!("circle {{pi/2, 3pi/2}}, random counts {counts:?}"))
}

fn command_for(file: &str) -> Option<Command> {
    let prefixes = [
        ("classify", Command::Classify),
        ("bifurcate", Command::Bifurcate),
        ("strips", Command::Strips),
        ("volume", Command::Volume),
        ("diameter", Command::Diameter),
        ("sweep", Command::UnfoldSweep),
        ("witness", Command::CycleWitness),
        ("blender_product", Command::BlenderProduct),
        ("blender", Command::BlenderCheck),
        ("tangency", Command::Tangency),
        ("entropy", Command::EntropyGap),
        ("cones", Command::Cones),
    ];
    prefixes.iter().find(|(p, _)| file.starts_with(p)).map(|(_, c)| *c)
}

fn run_suite(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut inputs: Vec<PathBuf> = std::fs::read_dir(&data)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    inputs.sort();
    for input in &inputs {
        let name = input.file_name().unwrap().to_string_lossy().to_string();
        let command = command_for(&name).ok_or_else(|| format!("no command for {name}"))?;
        let cfg = RunConfig {
            command,
            input_path: input.clone(),
            output_path: dir.join(format!("{name}.out")),
            seed: 17,
            threads: 1,
            tolerance_overrides: None,
        };
        ensure(run(&cfg) == 0, || format!("{name} failed"))?;
    }
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().to_string(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    Ok(files)
}

fn determinism() -> Check {
    let root = std::env::temp_dir().join(format!("blenderlab-acceptance-{}", std::process::id()));
    let a = run_suite(&root.join("a"));
    let b = run_suite(&root.join("b"));
    let _ = std::fs::remove_dir_all(&root);
    let (a, b) = (a?, b?);
    ensure(a.len() == b.len(), || "different file sets".into())?;
    for ((na, ca), (nb, cb)) in a.iter().zip(&b) {
        ensure(na == nb && ca == cb, || format!("{na} differs between runs"))?;
    }
    let bytes: usize = a.iter().map(|(_, c)| c.len()).sum();
    Ok(format!("{} report files, {bytes} bytes, identical across two runs", a.len()))
}

fn main() {
    let mut found = Vec::new();
    let results = [
        criterion(1, "saddle-node angle", 1.0, saddle_node),
        criterion(2, "strip scaling", 1.0, strip_scaling),
        criterion(3, "volume expansion", 10.0, volume),
        criterion(4, "diameter bound", 10.0, diameter),
        criterion(5, "index variation", 60.0, || index_variation(&mut found)),
        criterion(6, "cycle witness", 60.0, || cycle_witnesses(&found)),
        criterion(7, "blender superposition", 30.0, superposition),
        criterion(8, "entropy gap", 1.0, entropy),
        criterion(9, "domination", 1.0, domination),
        criterion(10, "tangency witness", 1.0, tangency),
        criterion(11, "determinism", f64::INFINITY, determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
