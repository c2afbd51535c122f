//! Parameter sweeps recording the u-indices of single-round saddles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{find_saddles_default, SingleRoundSaddle, UnfoldingError, UnfoldingParams};
use crate::local_model::LocalTangencyModel;

/// `steps + 1` equally spaced values from `lo` to `hi` (one value when
/// `steps` is 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 0 {
            return vec![self.lo];
        }
        (0..=self.steps)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / self.steps as f64)
            .collect()
    }

    fn zero() -> Grid {
        Grid {
            lo: 0.0,
            hi: 0.0,
            steps: 0,
        }
    }
}

fn default_refine_tol() -> f64 {
    1e-12
}

/// Sweep configuration file schema. `k` is an inclusive range; a range
/// with `k[0] > k[1]` is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub k: [usize; 2],
    pub t: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Grid>,
    /// Adjacent `t` samples with different u-index signatures are bisected
    /// until they are closer than this.
    #[serde(default = "default_refine_tol")]
    pub refine_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub u_index: usize,
    pub residual: f64,
    pub location: Vec<f64>,
}

/// Maximal run of consecutive `t` samples at which a saddle of the given
/// u-index exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub u_index: usize,
    pub alpha: f64,
    pub beta: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub width: f64,
    pub max_abs_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    pub k: usize,
    pub samples: usize,
    pub windows: Vec<Window>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<KSummary>,
}

impl SweepResult {
    /// Windows of one u-index at one `k`.
    pub fn windows(&self, k: usize, u_index: usize) -> Vec<&Window> {
        self.summary
            .iter()
            .filter(|s| s.k == k)
            .flat_map(|s| s.windows.iter().filter(|w| w.u_index == u_index))
            .collect()
    }

    /// CSV with columns `k,t,alpha,beta,u_index,residual` followed by the
    /// coordinates.
    pub fn to_csv(&self, coord_names: &[String]) -> String {
        let mut out = String::from("k,t,alpha,beta,u_index,residual");
        for c in coord_names {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}",
                r.k,
                fmt_f64(r.t),
                fmt_f64(r.alpha),
                fmt_f64(r.beta),
                r.u_index,
                fmt_f64(r.residual)
            ));
            for x in &r.location {
                out.push(',');
                out.push_str(&fmt_f64(*x));
            }
            out.push('\n');
        }
        out
    }
}

/// Seventeen significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct Sample {
    t: f64,
    saddles: Vec<SingleRoundSaddle>,
}

fn signature(s: &[SingleRoundSaddle]) -> Vec<usize> {
    let mut v: Vec<usize> = s.iter().map(|s| s.u_index).collect();
    v.sort_unstable();
    v
}

fn evaluate(model: &LocalTangencyModel, k: usize, t: f64, alpha: f64, beta: f64) -> Result<Sample, UnfoldingError> {
    let params = UnfoldingParams { t, alpha, beta };
    Ok(Sample {
        t,
        saddles: find_saddles_default(model, &params, k)?.saddles,
    })
}

fn sweep_cell(
    model: &LocalTangencyModel,
    k: usize,
    alpha: f64,
    beta: f64,
    cfg: &SweepConfig,
) -> Result<Vec<Sample>, UnfoldingError> {
    let mut samples: Vec<Sample> = cfg
        .t
        .values()
        .into_iter()
        .map(|t| evaluate(model, k, t, alpha, beta))
        .collect::<Result<_, _>>()?;
    let mut i = 0;
    while i + 1 < samples.len() {
        let (a, b) = (&samples[i], &samples[i + 1]);
        if signature(&a.saddles) != signature(&b.saddles) && b.t - a.t > cfg.refine_tol {
            let mid = 0.5 * (a.t + b.t);
            if mid <= a.t || mid >= b.t {
                i += 1;
                continue;
            }
            let s = evaluate(model, k, mid, alpha, beta)?;
            samples.insert(i + 1, s);
        } else {
            i += 1;
        }
    }
    Ok(samples)
}

/// Runs of the same index separated by less than `merge_gap` are joined.
fn windows_of(samples: &[Sample], alpha: f64, beta: f64, merge_gap: f64) -> Vec<Window> {
    let mut indices: Vec<usize> = samples.iter().flat_map(|s| signature(&s.saddles)).collect();
    indices.sort_unstable();
    indices.dedup();
    let mut out = Vec::new();
    for idx in indices {
        let mut run: Option<(f64, f64, f64)> = None;
        let close = |run: &mut Option<(f64, f64, f64)>, out: &mut Vec<Window>| {
            if let Some((lo, hi, m)) = run.take() {
                out.push(Window {
                    u_index: idx,
                    alpha,
                    beta,
                    t_lo: lo,
                    t_hi: hi,
                    width: hi - lo,
                    max_abs_t: m,
                });
            }
        };
        for s in samples {
            if s.saddles.iter().any(|x| x.u_index == idx) {
                run = Some(match run {
                    None => (s.t, s.t, s.t.abs()),
                    Some((lo, _, m)) => (lo, s.t, m.max(s.t.abs())),
                });
            } else {
                close(&mut run, &mut out);
            }
        }
        close(&mut run, &mut out);
    }
    let mut merged: Vec<Window> = Vec::with_capacity(out.len());
    for w in out {
        match merged.last_mut() {
            Some(prev) if prev.u_index == w.u_index && w.t_lo - prev.t_hi <= merge_gap => {
                prev.t_hi = w.t_hi;
                prev.width = prev.t_hi - prev.t_lo;
                prev.max_abs_t = prev.max_abs_t.max(w.max_abs_t);
            }
            _ => merged.push(w),
        }
    }
    merged
}

/// Sweeps `t` (and `alpha`, `beta` when given) for every `k` in range.
///
/// Cells `(k, alpha, beta)` run in parallel; rows and windows are merged in
/// grid order, so the result does not depend on the thread count.
pub fn index_variation_sweep(model: &LocalTangencyModel, cfg: &SweepConfig) -> Result<SweepResult, UnfoldingError> {
    if !(cfg.refine_tol > 0.0) || cfg.t.hi < cfg.t.lo {
        return Err(UnfoldingError::InvalidConfig(
            "need t.lo <= t.hi and refine_tol > 0".into(),
        ));
    }
    let alphas = cfg.alpha.unwrap_or_else(Grid::zero).values();
    let betas = cfg.beta.unwrap_or_else(Grid::zero).values();
    let mut cells = Vec::new();
    if cfg.k[0] <= cfg.k[1] {
        for k in cfg.k[0]..=cfg.k[1] {
            for &a in &alphas {
                for &b in &betas {
                    cells.push((k, a, b));
                }
            }
        }
    }
    let results: Vec<Result<Vec<Sample>, UnfoldingError>> = cells
        .par_iter()
        .map(|&(k, a, b)| sweep_cell(model, k, a, b, cfg))
        .collect();
    let mut rows = Vec::new();
    let mut summary: Vec<KSummary> = Vec::new();
    for (&(k, a, b), res) in cells.iter().zip(results) {
        let samples = res?;
        for s in &samples {
            for sd in &s.saddles {
                rows.push(SweepRow {
                    k,
                    t: s.t,
                    alpha: a,
                    beta: b,
                    u_index: sd.u_index,
                    residual: sd.residual,
                    location: sd.location.clone(),
                });
            }
        }
        let wins = windows_of(&samples, a, b, 1e3 * cfg.refine_tol);
        match summary.last_mut() {
            Some(last) if last.k == k => {
                last.samples += samples.len();
                last.windows.extend(wins);
            }
            _ => summary.push(KSummary {
                k,
                samples: samples.len(),
                windows: wins,
            }),
        }
    }
    Ok(SweepResult { rows, summary })
}
