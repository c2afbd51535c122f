//! Unfolding families `(t, alpha, beta)` of a tangency, single-round
//! saddles of the return maps and witnesses of heterodimensional cycles.

pub mod sweep;
pub mod witness;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{eigenvalues, mat_pow, operator_norm, rotation_dyn};
use crate::local_model::{LocalTangencyModel, ModelError};

pub use sweep::{index_variation_sweep, SweepConfig, SweepResult};
pub use witness::{cycle_witness, CycleWitness, WitnessOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnfoldingError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("parameter {0} is not active for this saddle")]
    InactiveParameter(&'static str),
    #[error("saddle has u-index {0}, at least 2 is needed")]
    IndexTooLow(usize),
    #[error("saddle lies outside the resized strip")]
    SaddleOutsideStrip,
    #[error("no crossing within {rounds} rounds; final loop diameter {final_diameter}")]
    NotFound { rounds: usize, final_diameter: f64 },
    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),
}

/// Parameters of the unfolding family. `t` translates the fold of the
/// transition map off the local stable manifold; `alpha` and `beta` rotate
/// the leading stable and unstable planes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UnfoldingParams {
    #[serde(default)]
    pub t: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleRoundSaddle {
    pub k: usize,
    pub location: Vec<f64>,
    pub u_index: usize,
    pub residual: f64,
    /// Eigenvalues of the return-map derivative as `[re, im]`.
    pub eigenvalues: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleSearch {
    pub saddles: Vec<SingleRoundSaddle>,
    pub failed_seeds: usize,
    /// `|A|^k |DT1|` at each saddle is below this bound; it keeps strong
    /// stable directions out of the u-index count.
    pub strong_stable_bound: f64,
}

const NEWTON_MAX_STEPS: usize = 200;
const NEWTON_TOL: f64 = 1e-10;
const POLISH_STEPS: usize = 30;
/// Residual required after polishing; near a fold the residual of points
/// with no nearby root stalls above it.
const ACCEPT_TOL: f64 = 1e-12;
const DAMPING: f64 = 0.5;
const MAX_HALVINGS: usize = 40;
const DEDUP_TOL: f64 = 1e-8;
const SEED_GRID: usize = 5;

/// Names of the parameters that may be nonzero, in order of activation.
pub fn active_parameters(model: &LocalTangencyModel) -> Vec<&'static str> {
    let mut candidates = vec!["t"];
    if model.dims.m_s == 2 {
        candidates.push("alpha");
    }
    if model.dims.n_u == 2 {
        candidates.push("beta");
    }
    let de = model
        .classification()
        .ok()
        .and_then(|c| c.effective_dimension)
        .map(|d| d as usize)
        .unwrap_or(1);
    candidates.truncate(de.max(1));
    candidates
}

/// The model of `f_params`: `B R_alpha`, `C R_beta` and the transition map
/// translated by `t`.
pub fn apply_params(
    model: &LocalTangencyModel,
    params: &UnfoldingParams,
) -> Result<LocalTangencyModel, UnfoldingError> {
    let active = active_parameters(model);
    if params.alpha != 0.0 && !active.contains(&"alpha") {
        return Err(UnfoldingError::InactiveParameter("alpha"));
    }
    if params.beta != 0.0 && !active.contains(&"beta") {
        return Err(UnfoldingError::InactiveParameter("beta"));
    }
    let mut out = model.clone();
    if params.alpha != 0.0 {
        out.b = &model.b * rotation_dyn(params.alpha);
    }
    if params.beta != 0.0 {
        out.c = &model.c * rotation_dyn(params.beta);
    }
    out.transition.t = model.transition.t + params.t;
    Ok(out)
}

/// `R_{k,t} = T_{1,t} o T_{0,t}^k` on the strip of the rotated model.
pub fn unfolded_return_map(
    model: &LocalTangencyModel,
    params: &UnfoldingParams,
    k: usize,
    p: &DVector<f64>,
) -> Result<DVector<f64>, UnfoldingError> {
    Ok(apply_params(model, params)?.return_map(k, p)?)
}

/// Default Newton seeds: a `5^d` grid over the central coordinates of the
/// strip (strong stable coordinates at the strip center) and the fold
/// estimate `(u+, x+, C^-k y-, D^-k v-)`.
pub fn default_seeds(model: &LocalTangencyModel, k: usize) -> Result<Vec<DVector<f64>>, ModelError> {
    let s = model.strip(k)?;
    let bx = &s.box_plus;
    let dims = model.dims;
    let central = dims.central();
    let dc = central.len();
    let center = bx.center();
    let mut seeds = Vec::new();
    for mut flat in 0..SEED_GRID.pow(dc as u32) {
        let mut p = center.clone();
        for c in central.clone() {
            let i = flat % SEED_GRID;
            flat /= SEED_GRID;
            let frac = (i as f64 + 0.5) / SEED_GRID as f64;
            p[c] = bx.lo[c] + frac * (bx.hi[c] - bx.lo[c]);
        }
        seeds.push(p);
    }
    let mut fold = model.y_plus.clone();
    for (blk, m) in [(2, &model.c), (3, &model.d)] {
        let r = dims.block(blk);
        if r.is_empty() {
            continue;
        }
        let inv = mat_pow(&m.clone().try_inverse().expect("invertible block"), k);
        let target = inv * model.y_minus.rows(r.start, r.len());
        fold.rows_mut(r.start, r.len()).copy_from(&target);
    }
    for i in 0..fold.len() {
        fold[i] = fold[i].clamp(bx.lo[i], bx.hi[i]);
    }
    seeds.push(fold);
    Ok(seeds)
}

fn newton(model: &LocalTangencyModel, k: usize, seed: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let n = seed.len();
    let id = DMatrix::<f64>::identity(n, n);
    let residual = |p: &DVector<f64>| {
        model
            .return_map_raw(k, p)
            .ok()
            .map(|r| r - p)
            .filter(|f| f.iter().all(|x| x.is_finite()))
    };
    let mut p = seed.clone();
    let mut f = residual(&p)?;
    for _ in 0..NEWTON_MAX_STEPS {
        let norm = f.norm();
        if norm < NEWTON_TOL {
            let (p, norm) = polish(model, k, p, f, &residual);
            return (norm < ACCEPT_TOL).then_some((p, norm));
        }
        let j = model.return_jacobian(k, &p).ok()? - &id;
        let step = j.lu().solve(&(-&f))?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let q = &p + &step * scale;
            if let Some(fq) = residual(&q) {
                if fq.norm() < norm {
                    accepted = Some((q, fq));
                    break;
                }
            }
            scale *= DAMPING;
        }
        let (q, fq) = accepted?;
        p = q;
        f = fq;
    }
    None
}

/// Full Newton steps after convergence, kept while they reduce the
/// residual.
fn polish(
    model: &LocalTangencyModel,
    k: usize,
    mut p: DVector<f64>,
    mut f: DVector<f64>,
    residual: &dyn Fn(&DVector<f64>) -> Option<DVector<f64>>,
) -> (DVector<f64>, f64) {
    let n = p.len();
    for _ in 0..POLISH_STEPS {
        let Some(step) = model
            .return_jacobian(k, &p)
            .ok()
            .and_then(|j| (j - DMatrix::<f64>::identity(n, n)).lu().solve(&(-&f)))
        else {
            break;
        };
        let q = &p + step;
        match residual(&q) {
            Some(fq) if fq.norm() < f.norm() => {
                p = q;
                f = fq;
            }
            _ => break,
        }
    }
    let norm = f.norm();
    (p, norm)
}

/// Fixed points of `R_{k,t}` in the strip, found by damped Newton from each
/// seed and deduplicated.
pub fn find_single_round_saddles(
    model: &LocalTangencyModel,
    params: &UnfoldingParams,
    k: usize,
    seeds: &[DVector<f64>],
) -> Result<SaddleSearch, UnfoldingError> {
    let fam = apply_params(model, params)?;
    let strip = match fam.strip(k) {
        Ok(s) => s,
        Err(ModelError::EmptyStrip(_)) => {
            return Ok(SaddleSearch {
                saddles: vec![],
                failed_seeds: 0,
                strong_stable_bound: 0.0,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let mut found: Vec<SingleRoundSaddle> = Vec::new();
    let mut failed = 0;
    let mut ss_bound: f64 = 0.0;
    let a_k = operator_norm(&fam.a).powi(k as i32);
    for seed in seeds {
        let Some((p, res)) = newton(&fam, k, seed) else {
            failed += 1;
            continue;
        };
        if !strip.box_plus.contains_with_tol(p.as_slice(), 1e-9) {
            failed += 1;
            continue;
        }
        if found
            .iter()
            .any(|s| (DVector::from_column_slice(&s.location) - &p).amax() < DEDUP_TOL)
        {
            continue;
        }
        let q = fam.t0_raw(&p, k);
        let dt1 = fam.t1_jacobian(&q)?;
        if fam.dims.du() > 0 {
            ss_bound = ss_bound.max(a_k * operator_norm(&dt1));
        }
        let dr = fam.return_jacobian(k, &p)?;
        let eig = eigenvalues(&dr);
        let u_index = eig.iter().filter(|z| z.norm() > 1.0).count();
        found.push(SingleRoundSaddle {
            k,
            location: p.iter().cloned().collect(),
            u_index,
            residual: res,
            eigenvalues: eig.iter().map(|z| [z.re, z.im]).collect(),
        });
    }
    if ss_bound >= 1.0 {
        log::warn!("strong stable return rate bound {ss_bound} is not below 1 at k = {k}");
    }
    found.sort_by(|a, b| {
        a.u_index.cmp(&b.u_index).then_with(|| {
            a.location
                .iter()
                .zip(&b.location)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    Ok(SaddleSearch {
        saddles: found,
        failed_seeds: failed,
        strong_stable_bound: ss_bound,
    })
}

/// Convenience: search with the default seeds.
pub fn find_saddles_default(
    model: &LocalTangencyModel,
    params: &UnfoldingParams,
    k: usize,
) -> Result<SaddleSearch, UnfoldingError> {
    let fam = apply_params(model, params)?;
    let seeds = match default_seeds(&fam, k) {
        Ok(s) => s,
        Err(ModelError::EmptyStrip(_)) => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    find_single_round_saddles(model, params, k, &seeds)
}
