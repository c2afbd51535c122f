//! Periodic-point spectra: ordering, saddle type, simplicity, leading
//! Jacobian, effective dimension, and the rotation family `A R_phi` whose
//! eigenvalues collide and leave the real axis.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{eigen2, rotation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error("multiplier {index} has modulus {modulus} within tolerance of 1")]
    UnitModulus { index: usize, modulus: f64 },
    #[error("{found} multipliers lie outside the unit circle but the u-index is {expected}")]
    IndexMismatch { found: usize, expected: usize },
    #[error("spectrum needs at least one stable and one unstable multiplier")]
    NotSaddle,
    #[error("saddle is not simple")]
    NotSimple,
    #[error("leading Jacobian {0} is not greater than one")]
    JacobianNotExpanding(f64),
    #[error("effective dimension undefined on the boundary case {0} = 1")]
    DegenerateProduct(&'static str),
    #[error("matrix must have real eigenvalues tau > rho > 0: {0}")]
    InvalidMatrix(String),
    #[error("discriminant keeps its sign on (0, pi): min {min_discriminant}, at angle {argmin}")]
    NoBifurcation { min_discriminant: f64, argmin: f64 },
}

/// Tolerances used when comparing moduli and detecting nonreal multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectraTolerances {
    /// Relative tolerance for `|a| == |b|`.
    pub modulus_rel: f64,
    /// A multiplier is nonreal when `|im| > nonreal_rel * |z|`.
    pub nonreal_rel: f64,
    /// Multipliers with `| |z| - 1 | <= unit_circle` are rejected.
    pub unit_circle: f64,
}

impl Default for SpectraTolerances {
    fn default() -> Self {
        Self {
            modulus_rel: 1e-9,
            nonreal_rel: 1e-9,
            unit_circle: 1e-12,
        }
    }
}

/// Multipliers of a saddle, split and ordered as
/// `|l_m| <= ... <= |l_1| = lambda < 1 < gamma = |g_1| <= ... <= |g_n|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSpectrum {
    /// Stable multipliers, leading (largest modulus) first.
    stable: Vec<Complex64>,
    /// Unstable multipliers, leading (smallest modulus) first.
    unstable: Vec<Complex64>,
}

impl SaddleSpectrum {
    pub fn new(multipliers: &[Complex64], u_index: usize) -> Result<Self, SpectraError> {
        Self::with_tolerances(multipliers, u_index, &SpectraTolerances::default())
    }

    pub fn with_tolerances(
        multipliers: &[Complex64],
        u_index: usize,
        tol: &SpectraTolerances,
    ) -> Result<Self, SpectraError> {
        for (index, z) in multipliers.iter().enumerate() {
            let modulus = z.norm();
            if (modulus - 1.0).abs() <= tol.unit_circle || !modulus.is_finite() {
                return Err(SpectraError::UnitModulus { index, modulus });
            }
        }
        let (mut stable, mut unstable): (Vec<Complex64>, Vec<Complex64>) =
            multipliers.iter().partition(|z| z.norm() < 1.0);
        if unstable.len() != u_index {
            return Err(SpectraError::IndexMismatch {
                found: unstable.len(),
                expected: u_index,
            });
        }
        if stable.is_empty() || unstable.is_empty() {
            return Err(SpectraError::NotSaddle);
        }
        // ties in modulus are broken by the imaginary part so that the
        // ordering, and hence the classification, is permutation invariant
        let key = |z: &Complex64| (z.norm(), z.im, z.re);
        stable.sort_by(|a, b| {
            let (ka, kb) = (key(a), key(b));
            kb.0.total_cmp(&ka.0)
                .then(kb.1.total_cmp(&ka.1))
                .then(kb.2.total_cmp(&ka.2))
        });
        unstable.sort_by(|a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0)
                .then(kb.1.total_cmp(&ka.1))
                .then(kb.2.total_cmp(&ka.2))
        });
        Ok(Self { stable, unstable })
    }

    pub fn stable(&self) -> &[Complex64] {
        &self.stable
    }

    pub fn unstable(&self) -> &[Complex64] {
        &self.unstable
    }

    /// Number of stable multipliers.
    pub fn m(&self) -> usize {
        self.stable.len()
    }

    /// Number of unstable multipliers (the u-index).
    pub fn n(&self) -> usize {
        self.unstable.len()
    }

    pub fn lambda(&self) -> f64 {
        self.stable[0].norm()
    }

    pub fn gamma(&self) -> f64 {
        self.unstable[0].norm()
    }

    /// Spectrum of the inverse map: multipliers `1/z`, u-index `m`.
    pub fn inverse(&self) -> SaddleSpectrum {
        let all: Vec<Complex64> = self
            .stable
            .iter()
            .chain(&self.unstable)
            .map(|z| z.inv())
            .collect();
        SaddleSpectrum::new(&all, self.m()).expect("inverse of a saddle is a saddle")
    }

    pub fn classify(&self, tol: &SpectraTolerances) -> SaddleClassification {
        let lambda = self.lambda();
        let gamma = self.gamma();
        let same = |a: f64, b: f64| (a - b).abs() <= tol.modulus_rel * a.max(b);
        let m_s = self.stable.iter().take_while(|z| same(z.norm(), lambda)).count();
        let n_u = self.unstable.iter().take_while(|z| same(z.norm(), gamma)).count();
        let simple = is_simple_group(&self.stable[..m_s], tol)
            && is_simple_group(&self.unstable[..n_u], tol);
        let leading_jacobian = lambda.powi(m_s as i32) * gamma.powi(n_u as i32);
        let mut c = SaddleClassification {
            m: self.m(),
            n: self.n(),
            m_s,
            n_u,
            simple,
            leading_jacobian,
            effective_dimension: None,
            lambda,
            gamma,
        };
        c.effective_dimension = effective_dimension(&c, lambda, gamma).ok();
        c
    }
}

/// A leading group is acceptable for a simple saddle when it is a single
/// multiplier or a nonreal conjugate pair.
fn is_simple_group(group: &[Complex64], tol: &SpectraTolerances) -> bool {
    match group {
        [_] => true,
        [a, b] => {
            let nonreal = |z: &Complex64| z.im.abs() > tol.nonreal_rel * z.norm();
            let scale = a.norm().max(b.norm());
            nonreal(a)
                && nonreal(b)
                && (a.re - b.re).abs() <= tol.modulus_rel * scale
                && (a.im + b.im).abs() <= tol.modulus_rel * scale
        }
        _ => false,
    }
}

/// Type, simplicity and leading Jacobian of a saddle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleClassification {
    pub m: usize,
    pub n: usize,
    pub m_s: usize,
    pub n_u: usize,
    pub simple: bool,
    pub leading_jacobian: f64,
    pub effective_dimension: Option<u8>,
    pub lambda: f64,
    pub gamma: f64,
}

pub fn classify(
    multipliers: &[Complex64],
    u_index: usize,
) -> Result<SaddleClassification, SpectraError> {
    classify_with(multipliers, u_index, &SpectraTolerances::default())
}

pub fn classify_with(
    multipliers: &[Complex64],
    u_index: usize,
    tol: &SpectraTolerances,
) -> Result<SaddleClassification, SpectraError> {
    Ok(SaddleSpectrum::with_tolerances(multipliers, u_index, tol)?.classify(tol))
}

/// Number of unfolding parameters of a simple saddle with expanding
/// leading Jacobian.
pub fn effective_dimension(
    c: &SaddleClassification,
    lambda: f64,
    gamma: f64,
) -> Result<u8, SpectraError> {
    if !c.simple {
        return Err(SpectraError::NotSimple);
    }
    if c.leading_jacobian <= 1.0 {
        return Err(SpectraError::JacobianNotExpanding(c.leading_jacobian));
    }
    let lg = lambda * gamma;
    let l2g = lambda * lambda * gamma;
    match (c.m_s, c.n_u) {
        (1, 1) => Ok(1),
        (1, 2) if lg > 1.0 => Ok(1),
        (1, 2) if lg < 1.0 => Ok(2),
        (1, 2) => Err(SpectraError::DegenerateProduct("lambda*gamma")),
        (2, 1) if l2g > 1.0 => Ok(2),
        (2, 2) if l2g > 1.0 => Ok(2),
        (2, 2) if l2g < 1.0 => Ok(3),
        (2, _) => Err(SpectraError::DegenerateProduct("lambda^2*gamma")),
        _ => Err(SpectraError::NotSimple),
    }
}

/// Eigenvalues of `A R_phi`.
pub fn rotation_eigenvalues(a: &Matrix2<f64>, phi: f64) -> (Complex64, Complex64) {
    eigen2(&(a * rotation(phi)))
}

/// `tr(A R_phi)^2 - 4 det A`; the eigenvalues of `A R_phi` are real iff
/// this is nonnegative.
pub fn rotation_discriminant(a: &Matrix2<f64>, phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    let tr = (a[(0, 0)] + a[(1, 1)]) * c + (a[(0, 1)] - a[(1, 0)]) * s;
    tr * tr - 4.0 * a.determinant()
}

const ANGLE_TOL: f64 = 1e-12;
const ANGLE_SAMPLES: usize = 4096;

/// Smallest `phi0 > 0` at which `A R_phi0` has a double real eigenvalue.
pub fn saddle_node_angle(a: &Matrix2<f64>) -> Result<f64, SpectraError> {
    let (t, r) = eigen2(a);
    if t.im != 0.0 || r.im != 0.0 {
        return Err(SpectraError::InvalidMatrix("nonreal eigenvalues".into()));
    }
    let (tau, rho) = (t.re, r.re);
    if !(rho > 0.0) || !(tau - rho > ANGLE_TOL * tau) {
        return Err(SpectraError::InvalidMatrix(format!("tau = {tau}, rho = {rho}")));
    }
    let disc = |phi: f64| rotation_discriminant(a, phi);
    let step = std::f64::consts::PI / ANGLE_SAMPLES as f64;
    let mut prev = 0.0;
    let mut min = (disc(0.0), 0.0);
    for i in 1..=ANGLE_SAMPLES {
        let phi = i as f64 * step;
        let d = disc(phi);
        if d < min.0 {
            min = (d, phi);
        }
        if d <= 0.0 {
            let (mut lo, mut hi) = (prev, phi);
            while hi - lo > ANGLE_TOL {
                let mid = 0.5 * (lo + hi);
                if disc(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev = phi;
    }
    Err(SpectraError::NoBifurcation {
        min_discriminant: min.0,
        argmin: min.1,
    })
}

/// Spectrum file schema: `{"multipliers": [[re, im], ...], "u_index": n}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumInput {
    pub multipliers: Vec<[f64; 2]>,
    pub u_index: usize,
}

impl SpectrumInput {
    pub fn complex(&self) -> Vec<Complex64> {
        self.multipliers
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn type_one_one_unit_jacobian() {
        let k = classify(&[c(0.5), c(2.0)], 1).unwrap();
        assert_eq!((k.m_s, k.n_u), (1, 1));
        assert!(k.simple);
        assert_eq!(k.leading_jacobian, 1.0);
        // J = 1 is not expanding, so no effective dimension
        assert_eq!(k.effective_dimension, None);
    }

    #[test]
    fn conjugate_stable_pair_is_simple_two_one() {
        let z = Complex64::from_polar(0.4, PI / 5.0);
        let k = classify(&[z, z.conj(), c(3.0)], 1).unwrap();
        assert_eq!((k.m_s, k.n_u), (2, 1));
        assert!(k.simple);
        assert!((k.leading_jacobian - 0.48).abs() < 1e-15);
    }

    #[test]
    fn repeated_real_pair_is_not_simple() {
        let k = classify(&[c(0.4), c(0.4), c(3.0)], 1).unwrap();
        assert_eq!((k.m_s, k.n_u), (2, 1));
        assert!(!k.simple);
    }

    #[test]
    fn mixed_two_two_is_not_simple() {
        let z = Complex64::from_polar(0.5, 1.0);
        let k = classify(&[z, z.conj(), c(3.0), c(3.0)], 2).unwrap();
        assert_eq!((k.m_s, k.n_u), (2, 2));
        assert!(!k.simple);
    }

    #[test]
    fn unit_modulus_and_index_mismatch_are_errors() {
        assert!(matches!(
            classify(&[c(1.0), c(2.0)], 1),
            Err(SpectraError::UnitModulus { index: 0, .. })
        ));
        assert!(matches!(
            classify(&[c(0.5), c(2.0), c(3.0)], 1),
            Err(SpectraError::IndexMismatch { found: 2, expected: 1 })
        ));
        let z = Complex64::from_polar(1.0, 0.3);
        assert!(matches!(
            classify(&[z, c(2.0)], 1),
            Err(SpectraError::UnitModulus { .. })
        ));
    }

    fn simple_class(m_s: usize, n_u: usize, lambda: f64, gamma: f64) -> SaddleClassification {
        let mut mult = Vec::new();
        if m_s == 1 {
            mult.push(c(lambda));
        } else {
            let z = Complex64::from_polar(lambda, 0.7);
            mult.extend([z, z.conj()]);
        }
        if n_u == 1 {
            mult.push(c(gamma));
        } else {
            let z = Complex64::from_polar(gamma, 1.1);
            mult.extend([z, z.conj()]);
        }
        mult.push(c(0.01));
        classify(&mult, n_u).unwrap()
    }

    #[test]
    fn effective_dimension_table() {
        let k = simple_class(1, 1, 0.5, 3.0);
        assert_eq!(effective_dimension(&k, 0.5, 3.0), Ok(1));
        let k = simple_class(2, 2, 0.6, 2.0);
        assert_eq!(effective_dimension(&k, 0.6, 2.0), Ok(3));
        let k = simple_class(2, 1, 0.8, 2.0);
        assert_eq!(effective_dimension(&k, 0.8, 2.0), Ok(2));
        let k = simple_class(1, 2, 0.6, 2.0);
        assert_eq!(effective_dimension(&k, 0.6, 2.0), Ok(1));
        let k = simple_class(1, 2, 0.3, 2.0);
        assert_eq!(effective_dimension(&k, 0.3, 2.0), Ok(2));
        let k = simple_class(2, 2, 0.8, 2.0);
        assert_eq!(effective_dimension(&k, 0.8, 2.0), Ok(2));
    }

    #[test]
    fn effective_dimension_errors() {
        let k = classify(&[c(0.4), c(0.4), c(9.0)], 1).unwrap();
        assert_eq!(effective_dimension(&k, 0.4, 9.0), Err(SpectraError::NotSimple));
        let k = simple_class(1, 1, 0.25, 2.0);
        assert!(matches!(
            effective_dimension(&k, 0.25, 2.0),
            Err(SpectraError::JacobianNotExpanding(_))
        ));
    }

    #[test]
    fn rotation_eigenvalues_at_trivial_angles() {
        let a = Matrix2::new(2.0, 0.0, 0.0, 0.5);
        let (p, q) = rotation_eigenvalues(&a, 0.0);
        assert!((p - c(2.0)).norm() < 1e-15 && (q - c(0.5)).norm() < 1e-15);
        let (p, q) = rotation_eigenvalues(&a, PI);
        let mut re = [p.re, q.re];
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 2.0).abs() < 1e-12 && (re[1] + 0.5).abs() < 1e-12);
        assert!(p.im.abs() < 1e-12);
    }

    #[test]
    fn rotation_past_saddle_node_gives_unit_circle_pair() {
        let a = Matrix2::new(2.0, 0.0, 0.0, 0.5);
        // (2.5 cos 0.7)^2 - 4 < 0
        assert!((2.5 * 0.7f64.cos()).powi(2) - 4.0 < 0.0);
        let (p, q) = rotation_eigenvalues(&a, 0.7);
        assert!(p.im.abs() > 1e-3);
        assert!((p - q.conj()).norm() < 1e-14);
        assert!((p.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn saddle_node_angle_rejects_near_double_eigenvalue() {
        let a = Matrix2::new(1.0 + 1e-15, 0.0, 0.0, 1.0);
        assert!(matches!(saddle_node_angle(&a), Err(SpectraError::InvalidMatrix(_))));
        let a = Matrix2::new(2.0, 0.0, 0.0, -0.5);
        assert!(matches!(saddle_node_angle(&a), Err(SpectraError::InvalidMatrix(_))));
    }

    #[test]
    fn spectrum_input_parses() {
        let s: SpectrumInput =
            serde_json::from_str(r#"{"multipliers": [[0.5, 0.0], [2.0, 0.0]], "u_index": 1}"#)
                .unwrap();
        let k = classify(&s.complex(), s.u_index).unwrap();
        assert_eq!(k.leading_jacobian, 1.0);
    }
}
