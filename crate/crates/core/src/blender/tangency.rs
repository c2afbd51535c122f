//! Tangencies of closed planar curves with the leaves of a foliation given
//! by the level sets of a submersion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BlenderError;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const GRADIENT_FLOOR: f64 = 1e-12;

/// Closed `C^1` curve parametrised on `[0, 2 pi)`.
pub trait ClosedCurve: Sync {
    fn point(&self, t: f64) -> [f64; 2];
    fn velocity(&self, t: f64) -> [f64; 2];
}

/// Submersion whose level sets are the leaves.
pub trait Foliation: Sync {
    fn value(&self, p: [f64; 2]) -> f64;
    fn gradient(&self, p: [f64; 2]) -> [f64; 2];
}

/// Trigonometric polynomial curve: each coordinate is
/// `sum_k a_k cos(k t) + b_k sin(k t)` with coefficients `[a_k, b_k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigCurve {
    pub y: Vec<[f64; 2]>,
    pub z: Vec<[f64; 2]>,
}

fn trig(c: &[[f64; 2]], t: f64) -> f64 {
    c.iter()
        .enumerate()
        .map(|(k, [a, b])| a * (k as f64 * t).cos() + b * (k as f64 * t).sin())
        .sum()
}

fn trig_dt(c: &[[f64; 2]], t: f64) -> f64 {
    c.iter()
        .enumerate()
        .map(|(k, [a, b])| {
            let k = k as f64;
            k * (b * (k * t).cos() - a * (k * t).sin())
        })
        .sum()
}

impl TrigCurve {
    pub fn ellipse(a: f64, b: f64) -> TrigCurve {
        TrigCurve {
            y: vec![[0.0, 0.0], [a, 0.0]],
            z: vec![[0.0, 0.0], [0.0, b]],
        }
    }

    pub fn circle() -> TrigCurve {
        TrigCurve::ellipse(1.0, 1.0)
    }

    /// Ellipse of radius `0.5` in `[0, 1]^2` plus seeded harmonics up to
    /// `degree` with coefficients of size at most `0.1 / k`.
    pub fn random(seed: u64, degree: usize) -> TrigCurve {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = vec![[0.5, 0.0], [0.3, 0.0]];
        let mut z = vec![[0.5, 0.0], [0.0, 0.3]];
        for k in 2..=degree.max(1) {
            let s = 0.1 / k as f64;
            y.push([rng.gen_range(-s..s), rng.gen_range(-s..s)]);
            z.push([rng.gen_range(-s..s), rng.gen_range(-s..s)]);
        }
        TrigCurve { y, z }
    }
}

impl ClosedCurve for TrigCurve {
    fn point(&self, t: f64) -> [f64; 2] {
        [trig(&self.y, t), trig(&self.z, t)]
    }

    fn velocity(&self, t: f64) -> [f64; 2] {
        [trig_dt(&self.y, t), trig_dt(&self.z, t)]
    }
}

/// `p -> normal . p`; `normal = (0, 1)` gives horizontal leaves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFoliation {
    pub normal: [f64; 2],
}

impl Foliation for LinearFoliation {
    fn value(&self, p: [f64; 2]) -> f64 {
        self.normal[0] * p[0] + self.normal[1] * p[1]
    }

    fn gradient(&self, _p: [f64; 2]) -> [f64; 2] {
        self.normal
    }
}

fn derivative(curve: &dyn ClosedCurve, fol: &dyn Foliation, t: f64) -> Result<f64, BlenderError> {
    let p = curve.point(t);
    let g = fol.gradient(p);
    if g[0].hypot(g[1]) < GRADIENT_FLOOR {
        return Err(BlenderError::DegenerateFoliation(t));
    }
    let v = curve.velocity(t);
    Ok(g[0] * v[0] + g[1] * v[1])
}

/// Parameters in `[0, 2 pi)` where `d/dt F(curve(t))` changes sign,
/// located on `samples` equally spaced points and refined by bisection to
/// `1e-10`.
pub fn tangency_witness(
    curve: &dyn ClosedCurve,
    fol: &dyn Foliation,
    samples: usize,
) -> Result<Vec<f64>, BlenderError> {
    let n = samples.max(8);
    let ts: Vec<f64> = (0..n).map(|i| TWO_PI * i as f64 / n as f64).collect();
    let ds: Vec<f64> = ts.iter().map(|&t| derivative(curve, fol, t)).collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        let (a, b) = (ds[i], ds[j]);
        if a == 0.0 {
            if ds[(i + n - 1) % n].signum() != b.signum() {
                out.push(ts[i]);
            }
            continue;
        }
        if b == 0.0 || a.signum() == b.signum() {
            continue;
        }
        let (mut lo, mut hi) = (ts[i], if j == 0 { TWO_PI } else { ts[j] });
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            let dm = derivative(curve, fol, mid)?;
            if dm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if dm.signum() == a.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push((0.5 * (lo + hi)) % TWO_PI);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}
