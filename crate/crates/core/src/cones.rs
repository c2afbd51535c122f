//! Dominated splittings and constant cone fields on a box.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoxN;
use crate::linalg::{is_diagonal, min_singular_value, operator_norm, spectral_radius};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error("invalid cone field: {0}")]
    InvalidCone(String),
    #[error("splitting is not invariant under the linear map")]
    NotInvariant,
    #[error("splitting is not dominated within {0} iterates")]
    NotDominated(usize),
    #[error("block has spectral radius {0} >= 1")]
    NotContracting(f64),
}

/// Constant cone field around the coordinate plane `F`:
/// `C_F = { w : |w_E| <= tan(half_angle) |w_F| }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeField {
    #[serde(rename = "E")]
    pub e: Vec<usize>,
    #[serde(rename = "F")]
    pub f: Vec<usize>,
    pub half_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub ok: bool,
    pub worst_margin: f64,
    pub samples: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    #[serde(rename = "C")]
    pub c: f64,
    pub kappa: f64,
}

/// A differentiable map: value and derivative at a point.
pub trait DiffMap: Sync {
    fn eval(&self, p: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>);
}

/// `p -> L p`.
pub struct LinearMap(pub DMatrix<f64>);

impl DiffMap for LinearMap {
    fn eval(&self, p: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        (&self.0 * p, self.0.clone())
    }
}

impl<F> DiffMap for F
where
    F: Fn(&DVector<f64>) -> (DVector<f64>, DMatrix<f64>) + Sync,
{
    fn eval(&self, p: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        self(p)
    }
}

pub const MAX_DOMINATION_TIME: usize = 1_000_000;
const DIRECTIONS_PER_PLANE: usize = 32;
const MAX_DIRECTIONS: usize = 4096;
const RATE_SAFETY: f64 = 1e-12;

impl ConeField {
    pub fn validate(&self, dim: usize) -> Result<(), ConeError> {
        let mut seen = vec![false; dim];
        for &i in self.e.iter().chain(&self.f) {
            if i >= dim || seen[i] {
                return Err(ConeError::InvalidCone(format!(
                    "index {i} repeated or out of range"
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) || self.f.is_empty() {
            return Err(ConeError::InvalidCone(
                "E and F must partition the coordinates with F nonempty".into(),
            ));
        }
        if !(self.half_angle > 0.0 && self.half_angle < std::f64::consts::FRAC_PI_2) {
            return Err(ConeError::InvalidCone("half-angle must lie in (0, pi/2)".into()));
        }
        Ok(())
    }

    fn split(&self, w: &DVector<f64>) -> (f64, f64) {
        let ne = self.e.iter().map(|&i| w[i] * w[i]).sum::<f64>().sqrt();
        let nf = self.f.iter().map(|&i| w[i] * w[i]).sum::<f64>().sqrt();
        (ne, nf)
    }

    /// Angle of `w` from the plane `F`.
    pub fn angle(&self, w: &DVector<f64>) -> f64 {
        let (ne, nf) = self.split(w);
        ne.atan2(nf)
    }

    /// Rays on the boundary of the cone: `tan(half_angle) a + b` with unit
    /// `a` in `E`, `b` in `F`.
    pub fn boundary_directions(&self, dim: usize) -> Vec<DVector<f64>> {
        let tan = self.half_angle.tan();
        let ea = unit_samples(&self.e, dim);
        let fb = unit_samples(&self.f, dim);
        let total = ea.len().max(1) * fb.len();
        let stride = total.div_ceil(MAX_DIRECTIONS).max(1);
        let mut out = Vec::new();
        let mut idx = 0;
        for b in &fb {
            if ea.is_empty() {
                if idx % stride == 0 {
                    out.push(b.clone());
                }
                idx += 1;
                continue;
            }
            for a in &ea {
                if idx % stride == 0 {
                    out.push(a * tan + b);
                }
                idx += 1;
            }
        }
        out
    }
}

/// Unit vectors supported on `idx`: `+-` the axis for one coordinate, 32
/// directions on every coordinate 2-plane otherwise.
fn unit_samples(idx: &[usize], dim: usize) -> Vec<DVector<f64>> {
    match idx.len() {
        0 => Vec::new(),
        1 => [1.0, -1.0]
            .iter()
            .map(|s| {
                let mut v = DVector::zeros(dim);
                v[idx[0]] = *s;
                v
            })
            .collect(),
        _ => {
            let mut out = Vec::new();
            for (a, &i) in idx.iter().enumerate() {
                for &j in &idx[a + 1..] {
                    for s in 0..DIRECTIONS_PER_PLANE {
                        let th = 2.0 * std::f64::consts::PI * s as f64 / DIRECTIONS_PER_PLANE as f64;
                        let mut v = DVector::zeros(dim);
                        v[i] = th.cos();
                        v[j] = th.sin();
                        out.push(v);
                    }
                }
            }
            out
        }
    }
}

fn sub(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Least `l` with `|L^l u| / |L^l v| < 1/2` for all unit `u` in `E`, `v`
/// in `F`.
pub fn domination_time(l: &DMatrix<f64>, e: &[usize], f: &[usize]) -> Result<usize, ConeError> {
    let cone = ConeField {
        e: e.to_vec(),
        f: f.to_vec(),
        half_angle: 0.5,
    };
    cone.validate(l.nrows())?;
    if e.is_empty() {
        return Err(ConeError::InvalidCone("E must be nonempty".into()));
    }
    if sub(l, e, f).amax() != 0.0 || sub(l, f, e).amax() != 0.0 {
        return Err(ConeError::NotInvariant);
    }
    let le = sub(l, e, e);
    let lf = sub(l, f, f);
    if is_diagonal(&le) && is_diagonal(&lf) {
        let emax = le.diagonal().iter().map(|x| x.abs()).fold(0.0, f64::max);
        let fmin = lf.diagonal().iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        let q = emax / fmin;
        if !(q < 1.0) {
            return Err(ConeError::NotDominated(MAX_DOMINATION_TIME));
        }
        let mut p = q;
        for ell in 1..=MAX_DOMINATION_TIME {
            if p < 0.5 {
                return Ok(ell);
            }
            p *= q;
        }
        return Err(ConeError::NotDominated(MAX_DOMINATION_TIME));
    }
    let fmin_eig = crate::linalg::eigenvalues(&lf)
        .iter()
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min);
    if !(spectral_radius(&le) < fmin_eig) {
        return Err(ConeError::NotDominated(MAX_DOMINATION_TIME));
    }
    // powers are renormalised, with the scales kept as logarithms
    let (mut pe, mut pf) = (le.clone(), lf.clone());
    let (mut se, mut sf) = (0.0f64, 0.0f64);
    for ell in 1..=MAX_DOMINATION_TIME {
        let ratio = (se - sf).exp() * operator_norm(&pe) / min_singular_value(&pf);
        if ratio < 0.5 {
            return Ok(ell);
        }
        pe = &le * pe;
        pf = &lf * pf;
        let (ne, nf) = (operator_norm(&pe), operator_norm(&pf));
        pe /= ne;
        pf /= nf;
        se += ne.ln();
        sf += nf.ln();
    }
    Err(ConeError::NotDominated(MAX_DOMINATION_TIME))
}

/// Checks `Dg(p) C_F` strictly inside `C_F` on a grid of the domain.
///
/// The margin of a boundary ray `w` is `angle(w) - angle(Dg w)`; grid points
/// whose image leaves the domain are skipped.
pub fn check_cone_invariance(
    map: &dyn DiffMap,
    cone: &ConeField,
    domain: &BoxN,
    resolution: usize,
) -> Result<ConeReport, ConeError> {
    let dim = domain.dim();
    cone.validate(dim)?;
    let dirs = cone.boundary_directions(dim);
    let n = resolution.max(1);
    let total = n.pow(dim as u32);
    let results: Vec<Option<f64>> = (0..total)
        .into_par_iter()
        .map(|mut flat| {
            let s: Vec<f64> = (0..dim)
                .map(|_| {
                    let i = flat % n;
                    flat /= n;
                    if n == 1 {
                        0.5
                    } else {
                        i as f64 / (n - 1) as f64
                    }
                })
                .collect();
            let p = domain.at_unit(&s);
            let (gp, dg) = map.eval(&p);
            if !domain.contains_with_tol(gp.as_slice(), 1e-12) {
                return None;
            }
            Some(
                dirs.iter()
                    .map(|w| cone.angle(w) - cone.angle(&(&dg * w)))
                    .fold(f64::INFINITY, f64::min),
            )
        })
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    let worst = results.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    Ok(ConeReport {
        ok: worst > 0.0 && worst.is_finite(),
        worst_margin: worst,
        samples: total,
        skipped,
    })
}

/// `kappa = rho(B) + 1e-12` and `C = max_{n <= N} |B^n| / kappa^n`.
pub fn uniform_rate_check(block: &DMatrix<f64>, horizon: usize) -> Result<RateReport, ConeError> {
    let rho = spectral_radius(block);
    if !(rho < 1.0) {
        return Err(ConeError::NotContracting(rho));
    }
    let kappa = rho + RATE_SAFETY;
    let mut p = DMatrix::identity(block.nrows(), block.ncols());
    let mut c: f64 = 1.0;
    for _ in 0..horizon {
        p = &p * block / kappa;
        c = c.max(operator_norm(&p));
    }
    Ok(RateReport { c, kappa })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rotation_dyn;
    use std::f64::consts::FRAC_PI_4;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn domination_times() {
        assert_eq!(domination_time(&diag(&[0.5, 2.0]), &[0], &[1]), Ok(1));
        assert_eq!(domination_time(&diag(&[0.9, 1.0]), &[0], &[1]), Ok(7));
        assert_eq!(domination_time(&diag(&[0.1, 10.0]), &[0], &[1]), Ok(1));
        assert!(matches!(
            domination_time(&diag(&[1.0, 1.0]), &[0], &[1]),
            Err(ConeError::NotDominated(_))
        ));
    }

    #[test]
    fn nondiagonal_domination_uses_singular_values() {
        let mut l = DMatrix::zeros(3, 3);
        l.view_mut((0, 0), (2, 2)).copy_from(&(rotation_dyn(0.3) * 0.9));
        l[(2, 2)] = 1.0;
        assert_eq!(domination_time(&l, &[0, 1], &[2]), Ok(7));
        l[(0, 2)] = 0.1;
        assert_eq!(domination_time(&l, &[0, 1], &[2]), Err(ConeError::NotInvariant));
    }

    fn unit_box() -> BoxN {
        BoxN::new(vec![-1.0, -1.0], vec![1.0, 1.0])
    }

    #[test]
    fn linear_cone_margins() {
        let cone = ConeField {
            e: vec![0],
            f: vec![1],
            half_angle: FRAC_PI_4,
        };
        // images of the box leave the box under expansion, so evaluate at
        // the origin only
        let origin = BoxN::new(vec![0.0, 0.0], vec![0.0, 0.0]);
        let r = check_cone_invariance(&LinearMap(diag(&[0.5, 2.0])), &cone, &origin, 1).unwrap();
        let expect = FRAC_PI_4.tan().atan2(1.0) - (0.25 * FRAC_PI_4.tan()).atan();
        assert!((r.worst_margin - expect).abs() < 1e-15);
        assert!(r.ok);
        let r = check_cone_invariance(&LinearMap(DMatrix::identity(2, 2)), &cone, &unit_box(), 5)
            .unwrap();
        assert_eq!(r.worst_margin, 0.0);
        assert!(!r.ok);
        let r = check_cone_invariance(&LinearMap(diag(&[2.0, 0.5])), &cone, &origin, 1).unwrap();
        assert!(r.worst_margin < 0.0 && !r.ok);
    }

    #[test]
    fn out_of_domain_images_are_skipped() {
        let cone = ConeField {
            e: vec![0],
            f: vec![1],
            half_angle: 0.5,
        };
        let r = check_cone_invariance(&LinearMap(diag(&[0.5, 2.0])), &cone, &unit_box(), 3).unwrap();
        // y = +-1 maps to +-2, outside the box
        assert_eq!(r.skipped, 6);
        assert_eq!(r.samples, 9);
    }

    #[test]
    fn direction_count_is_capped() {
        let cone = ConeField {
            e: (0..4).collect(),
            f: (4..8).collect(),
            half_angle: 0.3,
        };
        let dirs = cone.boundary_directions(8);
        assert!(dirs.len() <= MAX_DIRECTIONS && dirs.len() > 1000);
        for w in dirs.iter().take(50) {
            assert!((cone.angle(w) - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_rates() {
        let r = uniform_rate_check(&(rotation_dyn(0.7) * 0.5), 100).unwrap();
        assert!((r.kappa - 0.5).abs() < 1e-11);
        assert!((r.c - 1.0).abs() < 1e-9);
        let j = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]);
        let r = uniform_rate_check(&j, 200).unwrap();
        assert!(r.c > 1.0 && r.c.is_finite());
        assert!(matches!(
            uniform_rate_check(&diag(&[1.1, 0.2]), 10),
            Err(ConeError::NotContracting(_))
        ));
    }
}
