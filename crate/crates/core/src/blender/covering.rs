//! Covering of the central box by the images of the central maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::disk::{DiskSpec, SsDisk};
use super::superposition::verify_superposition;
use super::Blender;
use crate::geometry::BoxN;

const FACE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub ok: bool,
    /// Smallest overlap of adjacent images; minus the largest gap when the
    /// images do not cover.
    pub margin: f64,
    pub central_rates_in_half_one: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub ok: bool,
    pub margin: f64,
    pub eps0: f64,
    /// Propagation constant `c` in `eps0 = margin / c`.
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub covering_ok: bool,
    pub margin: f64,
    pub superposition_ok: bool,
}

/// Overlap margin of intervals covering `[a, b]`. Endpoints on or beyond
/// `[a, b]` do not count as junctions.
fn interval_margin(mut ivs: Vec<(f64, f64)>, a: f64, b: f64) -> f64 {
    ivs.retain(|&(lo, hi)| hi > a && lo < b);
    ivs.sort_by(|x, y| x.0.total_cmp(&y.0).then(y.1.total_cmp(&x.1)));
    let mut covered = a;
    let mut margin = f64::INFINITY;
    let mut worst_gap: f64 = 0.0;
    for (lo, hi) in ivs {
        if hi <= covered {
            continue;
        }
        if lo > covered + FACE_TOL {
            worst_gap = worst_gap.max(lo - covered);
        } else if covered > a + FACE_TOL {
            margin = margin.min(covered - lo.max(a));
        }
        covered = covered.max(hi);
        if covered >= b {
            break;
        }
    }
    if covered < b - FACE_TOL {
        worst_gap = worst_gap.max(b - covered);
    }
    if worst_gap > 0.0 {
        -worst_gap
    } else if margin.is_finite() {
        margin.max(0.0)
    } else {
        b - a
    }
}

/// Twice the smallest, over a grid of `target`, of the largest depth of a
/// point inside an image; only faces strictly inside `target` count.
fn grid_margin(images: &[BoxN], target: &BoxN) -> f64 {
    let d = target.dim();
    let per_dim = ((4096f64).powf(1.0 / d as f64).floor() as usize).clamp(3, 65);
    let mut idx = vec![0usize; d];
    let mut worst = f64::INFINITY;
    loop {
        let x: Vec<f64> = (0..d)
            .map(|q| target.lo[q] + (target.hi[q] - target.lo[q]) * idx[q] as f64 / (per_dim - 1) as f64)
            .collect();
        let best = images
            .iter()
            .map(|img| {
                let mut depth = f64::INFINITY;
                for q in 0..d {
                    if img.lo[q] > target.lo[q] + FACE_TOL {
                        depth = depth.min(x[q] - img.lo[q]);
                    }
                    if img.hi[q] < target.hi[q] - FACE_TOL {
                        depth = depth.min(img.hi[q] - x[q]);
                    }
                }
                depth
            })
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.min(best);
        let mut q = 0;
        while q < d {
            idx[q] += 1;
            if idx[q] < per_dim {
                break;
            }
            idx[q] = 0;
            q += 1;
        }
        if q == d {
            break;
        }
    }
    if worst.is_finite() {
        2.0 * worst
    } else {
        target.widths().into_iter().fold(f64::INFINITY, f64::min)
    }
}

pub fn covering_criterion(b: &Blender) -> CoveringReport {
    let target = b.central_box();
    let images: Vec<BoxN> = (0..b.branches.len()).map(|i| b.central_image(i)).collect();
    let margin = if b.d_cs == 1 {
        interval_margin(
            images.iter().map(|i| (i.lo[0], i.hi[0])).collect(),
            target.lo[0],
            target.hi[0],
        )
    } else {
        grid_margin(&images, &target)
    };
    CoveringReport {
        ok: margin >= 0.0,
        margin,
        central_rates_in_half_one: b.central_rates_in_half_one(),
    }
}

/// `eps0 = max(margin, 0) / c` with `c = 2 (1 + max |x|) / (1 - a_max)`,
/// where `|x|` ranges over the central box and `a_max` is the largest
/// central rate. Perturbing each image endpoint by at most
/// `eps (1 + max |x|)` and the attractor hull by at most that over
/// `1 - a_max` keeps every overlap positive.
pub fn robustness_margin(b: &Blender) -> RobustnessReport {
    let cov = covering_criterion(b);
    let c_box = b.central_box();
    let xmax = c_box
        .lo
        .iter()
        .chain(&c_box.hi)
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    let c = 2.0 * (1.0 + xmax) / (1.0 - b.max_central_rate());
    RobustnessReport {
        ok: cov.ok,
        margin: cov.margin,
        eps0: if cov.ok { cov.margin.max(0.0) / c } else { 0.0 },
        c,
    }
}

/// Adds uniform noise of size at most `eps` (operator norm for the linear
/// parts, sup norm for the offsets) to the `ss` and central parts of every
/// branch, then recomputes the central attractor hull.
pub fn perturb<R: Rng>(b: &Blender, eps: f64, rng: &mut R) -> Blender {
    let mut out = b.clone();
    let d_ss = b.d_ss;
    for br in out.branches.iter_mut() {
        for x in br.central.iter_mut() {
            *x += rng.gen_range(-eps..=eps);
        }
        let scale = eps / d_ss as f64;
        for x in br.ss.iter_mut() {
            *x += rng.gen_range(-scale..=scale);
        }
        for q in 0..d_ss + b.d_cs {
            br.offset[q] += rng.gen_range(-eps..=eps);
        }
    }
    out.with_attractor_hull()
}

/// Seeded perturbation trials. Each trial perturbs `b` by `eps`, checks
/// covering and runs the superposition verifier on vertical disks at the
/// given fractions of the (recomputed) central box.
pub fn perturbation_trials(
    b: &Blender,
    eps: f64,
    trials: usize,
    seed: u64,
    fractions: &[f64],
    depth: usize,
) -> Vec<TrialReport> {
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
            let p = perturb(b, eps, &mut rng);
            let cov = covering_criterion(&p);
            let c_box = p.central_box();
            let superposition_ok = cov.ok
                && fractions.iter().all(|f| {
                    let c: Vec<f64> = (0..p.d_cs).map(|q| c_box.lo[q] + f * (c_box.hi[q] - c_box.lo[q])).collect();
                    let spec = DiskSpec::VerticalAt(super::disk::Coords::Many(c));
                    SsDisk::from_spec(&spec, &p)
                        .ok()
                        .and_then(|d| verify_superposition(&p, &d, depth).ok())
                        .is_some()
                });
            TrialReport {
                trial,
                covering_ok: cov.ok,
                margin: cov.margin,
                superposition_ok,
            }
        })
        .collect()
}
