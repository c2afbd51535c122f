//! Search for a crossing of the unstable manifold of a single-round saddle
//! with the stable manifold of the original saddle.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{apply_params, SingleRoundSaddle, UnfoldingError, UnfoldingParams};
use crate::linalg::eigenvalues;
use crate::local_model::strip::ThetaPlanes;
use crate::local_model::{LocalTangencyModel, Strip};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WitnessOptions {
    /// Initial loop radius as a fraction of the smallest central width of
    /// the resized strip.
    pub radius_fraction: f64,
    pub initial_points: usize,
    pub max_points: usize,
    /// Adjacent loop points farther apart than this (in strip-normalised
    /// coordinates) get a midpoint inserted.
    pub max_gap: f64,
    pub tol: f64,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        Self {
            radius_fraction: 1e-3,
            initial_points: 64,
            max_points: 20_000,
            max_gap: 0.05,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleWitness {
    /// Round at which the iterated unstable loop first crosses an
    /// s-boundary plane.
    pub m0: usize,
    /// Point of `R^m0(loop)` on the s-boundary plane.
    pub crossing: Vec<f64>,
    /// Level of the crossed plane in the strip coordinates.
    pub plane: f64,
    /// Signed distances to the plane at the two bracketing loop points.
    pub bracket: [f64; 2],
    /// `|y - plane|` at `crossing`.
    pub residual: f64,
    pub quantifier_margin: f64,
}

/// Real basis of the span of eigenvectors of `m` for eigenvalues outside
/// the unit circle, largest moduli first, truncated to two vectors.
fn unstable_plane(m: &DMatrix<f64>) -> Option<[DVector<f64>; 2]> {
    let n = m.nrows();
    let mut eig: Vec<Complex64> = eigenvalues(m).into_iter().filter(|z| z.norm() > 1.0).collect();
    eig.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.im.total_cmp(&a.im)));
    let null_vector = |mu: Complex64| {
        let mc = DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(m[(i, j)], 0.0) - if i == j { mu } else { Complex64::new(0.0, 0.0) }
        });
        let svd = mc.svd(false, true);
        let vt = svd.v_t?;
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))?;
        Some(DVector::from_fn(n, |i, _| vt[(imin, i)].conj()))
    };
    let first = eig.first()?;
    if first.im.abs() > 1e-12 * first.norm() {
        let v = null_vector(*first)?;
        let re = v.map(|z| z.re);
        let im = v.map(|z| z.im);
        return Some([re.normalize(), im.normalize()]);
    }
    let second = eig.get(1)?;
    let a = null_vector(*first)?.map(|z| z.re).normalize();
    let b = null_vector(*second)?.map(|z| z.re).normalize();
    Some([a, b])
}

struct Tracker<'a> {
    model: &'a LocalTangencyModel,
    strip: &'a Strip,
    k: usize,
    center: DVector<f64>,
    basis: [DVector<f64>; 2],
    radius: f64,
}

impl Tracker<'_> {
    fn start(&self, theta: f64) -> DVector<f64> {
        &self.center + (&self.basis[0] * theta.cos() + &self.basis[1] * theta.sin()) * self.radius
    }

    /// `R^rounds` of the loop point at `theta`, or `None` if an earlier
    /// iterate leaves the strip.
    fn iterate(&self, theta: f64, rounds: usize) -> Option<DVector<f64>> {
        let mut p = self.start(theta);
        for _ in 0..rounds {
            if !self.strip.box_plus.contains_with_tol(p.as_slice(), 1e-12) {
                return None;
            }
            p = self.model.return_map_raw(self.k, &p).ok()?;
        }
        Some(p)
    }

    fn scaled_gap(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let w = self.strip.box_plus.widths();
        (0..a.len())
            .map(|i| if w[i] > 0.0 { ((a[i] - b[i]) / w[i]).abs() } else { 0.0 })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone)]
struct LoopPoint {
    theta: f64,
    pos: Option<DVector<f64>>,
}

/// Iterates a small loop around `saddle` in its unstable plane under
/// `R_{k,t}`, dropping points that leave the resized strip, until the loop
/// crosses one of the planes bounding the strip in the unstable direction.
#[allow(clippy::too_many_arguments)]
pub fn cycle_witness(
    model: &LocalTangencyModel,
    params: &UnfoldingParams,
    k: usize,
    saddle: &SingleRoundSaddle,
    theta_planes: &ThetaPlanes,
    j: usize,
    max_rounds: usize,
    opts: &WitnessOptions,
) -> Result<CycleWitness, UnfoldingError> {
    let fam = apply_params(model, params)?;
    let strip = fam.resized_strip(j, k, theta_planes)?;
    if saddle.u_index < 2 {
        return Err(UnfoldingError::IndexTooLow(saddle.u_index));
    }
    let center = DVector::from_column_slice(&saddle.location);
    if !strip.box_plus.contains(center.as_slice()) {
        return Err(UnfoldingError::SaddleOutsideStrip);
    }
    let dr = fam.return_jacobian(k, &center)?;
    let basis = unstable_plane(&dr).ok_or(UnfoldingError::IndexTooLow(saddle.u_index))?;
    let central = fam.dims.central();
    let min_width = central
        .clone()
        .map(|c| strip.box_plus.hi[c] - strip.box_plus.lo[c])
        .fold(f64::INFINITY, f64::min);
    let tracker = Tracker {
        model: &fam,
        strip: &strip,
        k,
        center,
        basis,
        radius: opts.radius_fraction * min_width,
    };
    let iy = fam.dims.y().start;
    let planes: Vec<f64> = strip
        .s_boundary
        .as_ref()
        .map(|f| f.iter().map(|f| f.value).collect())
        .unwrap_or_default();
    let n0 = opts.initial_points.max(8);
    let mut pts: Vec<LoopPoint> = (0..n0)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / n0 as f64;
            LoopPoint {
                theta,
                pos: Some(tracker.start(theta)),
            }
        })
        .collect();
    let mut last_diameter = 2.0 * tracker.radius;
    for round in 0..=max_rounds {
        if round > 0 {
            for p in pts.iter_mut() {
                p.pos = p.pos.take().and_then(|q| {
                    if !strip.box_plus.contains_with_tol(q.as_slice(), 1e-12) {
                        return None;
                    }
                    fam.return_map_raw(k, &q).ok()
                });
            }
            refine(&tracker, &mut pts, round, opts);
        }
        last_diameter = loop_diameter(&pts);
        for i in 0..pts.len() {
            let a = &pts[i];
            let b = &pts[(i + 1) % pts.len()];
            let (Some(pa), Some(pb)) = (&a.pos, &b.pos) else {
                continue;
            };
            for &level in &planes {
                let (ga, gb) = (pa[iy] - level, pb[iy] - level);
                if ga * gb < 0.0 {
                    let tb = if b.theta > a.theta {
                        b.theta
                    } else {
                        b.theta + 2.0 * std::f64::consts::PI
                    };
                    if let Some((p, g)) = bisect(&tracker, a.theta, tb, ga, round, iy, level, opts.tol) {
                        return Ok(CycleWitness {
                            m0: round,
                            crossing: p.iter().cloned().collect(),
                            plane: level,
                            bracket: [ga, gb],
                            residual: g.abs(),
                            quantifier_margin: strip.quantifier_margin.unwrap_or(f64::NAN),
                        });
                    }
                }
            }
        }
    }
    Err(UnfoldingError::NotFound {
        rounds: max_rounds,
        final_diameter: last_diameter,
    })
}

fn loop_diameter(pts: &[LoopPoint]) -> f64 {
    let live: Vec<&DVector<f64>> = pts.iter().filter_map(|p| p.pos.as_ref()).collect();
    let mut d: f64 = 0.0;
    for (i, a) in live.iter().enumerate() {
        for b in live.iter().skip(i + 1).step_by(1 + live.len() / 256) {
            d = d.max((*a - *b).norm());
        }
    }
    d
}

fn refine(tracker: &Tracker, pts: &mut Vec<LoopPoint>, round: usize, opts: &WitnessOptions) {
    let mut i = 0;
    while i < pts.len() && pts.len() < opts.max_points {
        let j = (i + 1) % pts.len();
        let split = match (&pts[i].pos, &pts[j].pos) {
            (Some(a), Some(b)) => tracker.scaled_gap(a, b) > opts.max_gap,
            _ => false,
        };
        let (ta, mut tb) = (pts[i].theta, pts[j].theta);
        if tb <= ta {
            tb += 2.0 * std::f64::consts::PI;
        }
        let mid = 0.5 * (ta + tb);
        if split && mid > ta && mid < tb {
            let pos = tracker.iterate(mid, round);
            pts.insert(i + 1, LoopPoint { theta: mid, pos });
        } else {
            i += 1;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn bisect(
    tracker: &Tracker,
    mut ta: f64,
    mut tb: f64,
    ga: f64,
    rounds: usize,
    iy: usize,
    level: f64,
    tol: f64,
) -> Option<(DVector<f64>, f64)> {
    let sa = ga.signum();
    let mut best = None;
    for _ in 0..200 {
        let mid = 0.5 * (ta + tb);
        let p = tracker.iterate(mid, rounds)?;
        let g = p[iy] - level;
        if g.abs() < tol {
            return Some((p, g));
        }
        if g.signum() == sa {
            ta = mid;
        } else {
            tb = mid;
        }
        best = Some((p, g));
        if tb - ta <= f64::EPSILON * tb.abs().max(1.0) {
            break;
        }
    }
    best.filter(|(_, g)| g.abs() < tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::unfolding::find_saddles_default;

    #[test]
    fn witness_for_index_two_saddle() {
        let m = presets::de1_model();
        let theta = presets::de1_theta();
        let k = 6;
        let params = UnfoldingParams {
            t: presets::de1_window_center(k),
            ..Default::default()
        };
        let found = find_saddles_default(&m, &params, k).unwrap();
        let s = found.saddles.iter().find(|s| s.u_index == 2).unwrap();
        let w = cycle_witness(&m, &params, k, s, &theta, 0, 50, &WitnessOptions::default()).unwrap();
        assert!(w.residual < 1e-10);
        assert!(w.bracket[0] * w.bracket[1] < 0.0);
        assert!(w.m0 <= 50);
    }

    #[test]
    fn quantifier_gate_comes_first() {
        let m = presets::de1_model();
        let k = 6;
        let params = UnfoldingParams {
            t: presets::de1_window_center(k),
            ..Default::default()
        };
        let found = find_saddles_default(&m, &params, k).unwrap();
        let s = found.saddles.iter().find(|s| s.u_index == 2).unwrap();
        let bad = ThetaPlanes {
            pairs: vec![[0.7, 1.3]],
            rho: 0.45,
        };
        let err = cycle_witness(&m, &params, k, s, &bad, 0, 50, &WitnessOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            UnfoldingError::Model(crate::local_model::ModelError::QuantifierViolation(_))
        ));
    }
}
