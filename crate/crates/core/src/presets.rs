//! Ready-made models used by the tests, the examples and the sample inputs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blender::{Blender, BlenderSpec, BlockLinear, BranchSpec, Orientation};
use crate::geometry::BoxN;
use crate::local_model::strip::ThetaPlanes;
use crate::local_model::{LocalTangencyModel, ModelSpec, TransitionSpec};
use crate::unfolding::sweep::Grid;
use crate::unfolding::{SweepConfig, UnfoldingParams};

/// Rotation angle of the stable multipliers of [`de2_model`].
pub const DE2_STABLE_ANGLE: f64 = 1.0;

const DE1_LAMBDA: f64 = 0.5;
const DE1_GAMMA: f64 = 3.0;

fn blocks(entries: &[(&str, Vec<Vec<f64>>)]) -> BTreeMap<String, Vec<Vec<f64>>> {
    entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Codimension-one model with one stable, one unstable leading multiplier
/// and one strong stable direction: `A = 0.1`, `B = 0.5`, `C = 3`, a
/// quadratic tangency with unit coefficients and no remainder.
pub fn de1_spec() -> ModelSpec {
    ModelSpec {
        m: 2,
        n: 1,
        m_s: 1,
        n_u: 1,
        a: vec![vec![0.1]],
        b: vec![vec![DE1_LAMBDA]],
        c: vec![vec![DE1_GAMMA]],
        d: vec![],
        w: BoxN::new(vec![-2.0; 3], vec![2.0; 3]),
        y_minus: vec![0.0, 0.0, 1.0],
        y_plus: vec![0.0, 1.0, 0.0],
        pi_minus: BoxN::new(vec![-0.1, -0.1, 0.9], vec![0.1, 0.1, 1.1]),
        pi_plus: BoxN::new(vec![-0.1, 0.6, -0.1], vec![0.1, 1.1, 0.1]),
        ell: 1,
        transition: TransitionSpec {
            c3: vec![vec![vec![1.0]]],
            remainder: None,
            blocks: blocks(&[("B3", vec![vec![1.0]]), ("C2", vec![vec![1.0]])]),
        },
        cone_half_angle: 0.3,
    }
}

pub fn de1_model() -> LocalTangencyModel {
    LocalTangencyModel::from_spec(&de1_spec()).expect("preset model is valid")
}

/// Centre of the `t`-window in which [`de1_model`] has a single-round saddle
/// of u-index two for the return time `k`.
///
/// Fixed points of the return map satisfy `(Y - 1)^2 + e Y + t = 0` with
/// `Y = gamma^k y` and `e = lambda^k - gamma^-k`; the index-two branch is
/// `|Y - 1| < e / 2`, i.e. `t` in `[-e - 3e^2/4, -e + e^2/4]`.
pub fn de1_window_center(k: usize) -> f64 {
    let e = de1_e(k);
    -e - 0.25 * e * e
}

/// Exact index-two window `[t_lo, t_hi]` of [`de1_model`].
pub fn de1_window(k: usize) -> [f64; 2] {
    let e = de1_e(k);
    [-e - 0.75 * e * e, -e + 0.25 * e * e]
}

fn de1_e(k: usize) -> f64 {
    DE1_LAMBDA.powi(k as i32) - DE1_GAMMA.powi(-(k as i32))
}

/// Planes `y = 1 +- 0.02` in `Pi-` with `rho = 0.45`.
pub fn de1_theta() -> ThetaPlanes {
    ThetaPlanes {
        pairs: vec![[0.98, 1.02]],
        rho: 0.45,
    }
}

/// Sweep of `t` in `[-0.04, 0]` for `k` from 5 to 9.
pub fn de1_sweep() -> SweepConfig {
    SweepConfig {
        k: [5, 9],
        t: Grid {
            lo: -0.04,
            hi: 0.0,
            steps: 400,
        },
        alpha: None,
        beta: None,
        refine_tol: 1e-12,
    }
}

/// Model with a complex pair of stable multipliers `0.8 e^{+-i}` and one
/// unstable multiplier `2`, so `lambda^2 gamma > 1` and the effective
/// dimension is two.
pub fn de2_spec() -> ModelSpec {
    let (s, c) = DE2_STABLE_ANGLE.sin_cos();
    let r = 0.8;
    ModelSpec {
        m: 3,
        n: 1,
        m_s: 2,
        n_u: 1,
        a: vec![vec![0.1]],
        b: vec![vec![r * c, -r * s], vec![r * s, r * c]],
        c: vec![vec![2.0]],
        d: vec![],
        w: BoxN::new(vec![-2.0; 4], vec![2.0; 4]),
        y_minus: vec![0.0, 0.0, 0.0, 1.0],
        y_plus: vec![0.0, 1.0, 0.0, 0.0],
        pi_minus: BoxN::new(vec![-0.1, -0.1, -0.1, 0.9], vec![0.1, 0.1, 0.1, 1.1]),
        pi_plus: BoxN::new(vec![-0.1, 0.6, -0.25, -0.1], vec![0.1, 1.1, 0.25, 0.1]),
        ell: 1,
        transition: TransitionSpec {
            c3: vec![vec![vec![1.0]]],
            remainder: None,
            blocks: blocks(&[
                ("B2", vec![vec![0.3, 0.0], vec![0.0, 0.3]]),
                ("C2", vec![vec![1.0], vec![0.5]]),
                ("B3", vec![vec![1.0, 0.5]]),
            ]),
        },
        cone_half_angle: 0.3,
    }
}

pub fn de2_model() -> LocalTangencyModel {
    LocalTangencyModel::from_spec(&de2_spec()).expect("preset model is valid")
}

/// Parameters of [`de2_model`] for which `R_k` has a fixed point with
/// `gamma^k y = 1 + h` and total stable rotation `k (theta + alpha) = phi`
/// (mod `2 pi`), with `alpha` taken closest to zero.
pub fn de2_parameters(k: usize, phi: f64, h: f64) -> UnfoldingParams {
    use nalgebra::{DMatrix, DVector};
    let spec = de2_spec();
    let kf = k as f64;
    let step = 2.0 * std::f64::consts::PI / kf;
    let mut alpha = phi / kf - DE2_STABLE_ANGLE;
    alpha -= (alpha / step).round() * step;
    let lk = 0.8f64.powi(k as i32);
    let (s, c) = phi.sin_cos();
    let lam = DMatrix::from_row_slice(2, 2, &[lk * c, -lk * s, lk * s, lk * c]);
    let b2 = DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, 0.3]);
    let c2 = DVector::from_column_slice(&[1.0, 0.5]);
    let b3 = DMatrix::from_row_slice(1, 2, &[1.0, 0.5]);
    let xp = DVector::from_column_slice(&spec.y_plus[1..3]);
    let x = (DMatrix::identity(2, 2) - &b2 * &lam)
        .lu()
        .solve(&(xp + c2 * h))
        .expect("I - B2 Lambda is invertible");
    let y = 2f64.powi(-(k as i32)) * (1.0 + h);
    let t = y - (b3 * (&lam * x))[0] - h * h;
    UnfoldingParams { t, alpha, beta: 0.0 }
}

/// Linear transition with `C3 = 0` and unit `B3`, `C2`; the central
/// Jacobian of `R_k` is `(lambda gamma)^k` exactly.
pub fn volume_spec(lambda: f64, gamma: f64) -> ModelSpec {
    ModelSpec {
        m: 2,
        n: 1,
        m_s: 1,
        n_u: 1,
        a: vec![vec![0.05 * lambda]],
        b: vec![vec![lambda]],
        c: vec![vec![gamma]],
        d: vec![],
        w: BoxN::new(vec![-2.0; 3], vec![2.0; 3]),
        y_minus: vec![0.0, 0.0, 1.0],
        y_plus: vec![0.0, 1.0, 0.0],
        pi_minus: BoxN::new(vec![-0.1, -0.1, 0.9], vec![0.1, 0.1, 1.1]),
        pi_plus: BoxN::new(vec![-0.1, 0.9, -0.1], vec![0.1, 1.1, 0.1]),
        ell: 1,
        transition: TransitionSpec {
            c3: vec![vec![vec![0.0]]],
            remainder: None,
            blocks: blocks(&[("B3", vec![vec![1.0]]), ("C2", vec![vec![1.0]])]),
        },
        cone_half_angle: 0.3,
    }
}

pub fn volume_model(lambda: f64, gamma: f64) -> LocalTangencyModel {
    LocalTangencyModel::from_spec(&volume_spec(lambda, gamma)).expect("preset model is valid")
}

/// Two-branch blender on `U = [-1, 1] x [0, 1] x [0, 1]` with `ss` rate
/// `0.25`, `uu` rate `3`, central maps `x -> a1 x` and `x -> a2 x + b2`.
/// The distinctive saddle is the fixed point `(0, 0, 0.15)` of branch 0.
pub fn affine_pair(a1: f64, a2: f64, b2: f64) -> Blender {
    let branch = |a: f64, c_off: f64, u_off: f64, dom: [f64; 2]| BranchSpec {
        linear: BlockLinear {
            ss: vec![vec![0.25]],
            central: vec![vec![a]],
            uu: vec![vec![3.0]],
        },
        offset: vec![0.0, c_off, u_off],
        domain: BoxN::new(vec![-1.0, 0.0, dom[0]], vec![1.0, 1.0, dom[1]]),
    };
    let spec = BlenderSpec {
        d_ss: 1,
        d_cs: 1,
        d_uu: 1,
        reference: BoxN::new(vec![-1.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]),
        branches: vec![
            branch(a1, 0.0, -0.3, [0.1, 0.45]),
            branch(a2, b2, -1.8, [0.55, 0.95]),
        ],
        distinctive: 0,
        orientation: Orientation::Cs,
        cone_half_angle: 0.3,
    };
    Blender::from_spec(&spec).expect("preset blender is valid")
}

/// [`affine_pair`] with equal central rates.
pub fn two_branch_blender(a: f64, b2: f64) -> Blender {
    affine_pair(a, a, b2)
}

/// Seeded covering pair: rates in `(0.55, 0.9)`, images `[0, a1]` and
/// `[1 - a2, 1]`.
pub fn random_covering_pair(seed: u64) -> Blender {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a1 = rng.gen_range(0.55..0.9);
    let a2 = rng.gen_range(0.55..0.9);
    affine_pair(a1, a2, 1.0 - a2)
}

/// Seeded gapped pair with rates in `(0.3, 0.45)` and the midpoint of the
/// gap between `[0, a1]` and `[1 - a2, 1]`.
pub fn random_gap_pair(seed: u64) -> (Blender, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a1 = rng.gen_range(0.3..0.45);
    let a2 = rng.gen_range(0.3..0.45);
    (affine_pair(a1, a2, 1.0 - a2), 0.5 * (a1 + 1.0 - a2))
}

/// Four-branch blender with a two-dimensional central box `[0, 1]^2`,
/// central rates `rates` in both branches and images at the four corners.
pub fn two_central_blender(rates: [f64; 2]) -> Blender {
    let [r1, r2] = rates;
    let mut branches = Vec::new();
    for (j, (o1, o2)) in [(0.0, 0.0), (1.0 - r1, 0.0), (0.0, 1.0 - r2), (1.0 - r1, 1.0 - r2)]
        .into_iter()
        .enumerate()
    {
        let z0 = 0.02 + 0.25 * j as f64;
        branches.push(BranchSpec {
            linear: BlockLinear {
                ss: vec![vec![0.25]],
                central: vec![vec![r1, 0.0], vec![0.0, r2]],
                uu: vec![vec![5.0]],
            },
            offset: vec![0.0, o1, o2, -5.0 * z0],
            domain: BoxN::new(vec![-1.0, 0.0, 0.0, z0], vec![1.0, 1.0, 1.0, z0 + 0.2]),
        });
    }
    let spec = BlenderSpec {
        d_ss: 1,
        d_cs: 2,
        d_uu: 1,
        reference: BoxN::new(vec![-1.0, 0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0, 1.0]),
        branches,
        distinctive: 0,
        orientation: Orientation::Cs,
        cone_half_angle: 0.3,
    };
    Blender::from_spec(&spec).expect("preset blender is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_construct() {
        let m = de1_model();
        assert_eq!(m.classification().unwrap().effective_dimension, Some(1));
        let m = de2_model();
        assert_eq!(m.classification().unwrap().effective_dimension, Some(2));
        let _ = volume_model(0.9, 2.0);
    }

    #[test]
    fn window_center_inside_window() {
        for k in 5..10 {
            let [lo, hi] = de1_window(k);
            let c = de1_window_center(k);
            assert!(lo < c && c < hi);
        }
    }

    #[test]
    fn de2_saddles_of_index_two_and_three_coexist() {
        use crate::unfolding::find_saddles_default;
        let p = de2_parameters(11, std::f64::consts::FRAC_PI_2 - 0.02, -1e-3);
        let s = find_saddles_default(&de2_model(), &p, 11).unwrap();
        let idx: Vec<usize> = s.saddles.iter().map(|s| s.u_index).collect();
        assert!(idx.contains(&2) && idx.contains(&3), "{idx:?}");
    }
}
