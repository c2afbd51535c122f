//! Strips `Pi_k+ = T0^-k(Pi-) cap Pi+` and their resized variants bounded
//! by stable-manifold planes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{LocalTangencyModel, ModelError};
use crate::geometry::{BoxN, Interval};
use crate::linalg::{is_diagonal, mat_pow};

const K_SEARCH_MAX: usize = 500;

/// A face `{p[coord] = value}` of a box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub coord: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub k: usize,
    pub box_plus: BoxN,
    pub box_minus: BoxN,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_boundary: Option<Vec<Face>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_boundary: Option<Vec<Face>>,
    /// `10 K delta / rho` for resized strips.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantifier_margin: Option<f64>,
}

/// Pairs of levels `lower < y_minus < upper` of the planes `Theta_j` in
/// `Pi-`, together with the c-diameter lower bound `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaPlanes {
    pub pairs: Vec<[f64; 2]>,
    pub rho: f64,
}

impl ThetaPlanes {
    pub fn delta(&self, j: usize) -> f64 {
        self.pairs[j][1] - self.pairs[j][0]
    }
}

fn nonempty(b: &BoxN) -> bool {
    (0..b.dim()).all(|i| b.lo[i] < b.hi[i])
}

/// Set of `z` in `plus` with `M^i z` in `w` for `0 < i < k` and `M^k z` in
/// `minus`: exact per coordinate for diagonal `M`, an outer bounding box
/// otherwise.
fn block_preimage(m: &DMatrix<f64>, plus: &BoxN, w: &BoxN, minus: &BoxN, k: usize) -> BoxN {
    if is_diagonal(m) {
        let iv: Vec<Interval> = (0..m.nrows())
            .map(|j| {
                let s = m[(j, j)];
                let mut acc = plus.interval(j);
                let mut p = 1.0;
                for _ in 1..k {
                    p *= s;
                    acc = acc.intersect(&w.interval(j).scale(1.0 / p));
                }
                let pk = s.powi(k as i32);
                acc.intersect(&minus.interval(j).scale(1.0 / pk))
            })
            .collect();
        return BoxN::from_intervals(&iv);
    }
    let inv = m.clone().try_inverse().expect("blocks of T0 are invertible");
    let mut acc = plus.clone();
    let mut p = DMatrix::identity(m.nrows(), m.nrows());
    for _ in 1..k {
        p = &inv * p;
        acc = acc.intersect(&w.linear_image(&p, None));
    }
    acc.intersect(&minus.linear_image(&mat_pow(&inv, k), None))
}

impl Strip {
    /// Width of coordinate block `i` (`0..4` for `u, x, y, v`) of `Pi_k+`.
    pub fn block_diameter(&self, model: &LocalTangencyModel, i: usize) -> f64 {
        let r = model.dims.block(i);
        self.box_plus.slice(r.start, r.len()).diameter()
    }

    /// u-diameter: extent in the leading unstable coordinates.
    pub fn diam_u(&self, model: &LocalTangencyModel) -> f64 {
        self.block_diameter(model, 2)
    }

    /// c-diameter: extent in the leading stable coordinates.
    pub fn diam_c(&self, model: &LocalTangencyModel) -> f64 {
        self.block_diameter(model, 1)
    }
}

impl LocalTangencyModel {
    fn strip_unchecked(&self, k: usize) -> Option<Strip> {
        let blocks = [&self.a, &self.b, &self.c, &self.d];
        let mut lo = Vec::with_capacity(self.dims.total());
        let mut hi = Vec::with_capacity(self.dims.total());
        let mut mlo = lo.clone();
        let mut mhi = hi.clone();
        for (i, m) in blocks.iter().enumerate() {
            let r = self.dims.block(i);
            if r.is_empty() {
                continue;
            }
            let plus = self.pi_plus.slice(r.start, r.len());
            let w = self.w.slice(r.start, r.len());
            let minus = self.pi_minus.slice(r.start, r.len());
            let pre = block_preimage(m, &plus, &w, &minus, k);
            let img = pre.linear_image(&mat_pow(m, k), None).intersect(&minus);
            lo.extend(pre.lo);
            hi.extend(pre.hi);
            mlo.extend(img.lo);
            mhi.extend(img.hi);
        }
        let box_plus = BoxN::new(lo, hi);
        let box_minus = BoxN::new(mlo, mhi);
        (nonempty(&box_plus) && nonempty(&box_minus)).then_some(Strip {
            k,
            box_plus,
            box_minus,
            s_boundary: None,
            u_boundary: None,
            quantifier_margin: None,
        })
    }

    /// The strip `Pi_k+` and its image `Pi_k- = T0^k(Pi_k+)`.
    pub fn strip(&self, k: usize) -> Result<Strip, ModelError> {
        if k == 0 {
            return Err(ModelError::EmptyStrip(0));
        }
        self.strip_unchecked(k).ok_or(ModelError::EmptyStrip(k))
    }

    /// Least `k >= 1` with a nonempty strip.
    pub fn k0(&self) -> Result<usize, ModelError> {
        (1..=K_SEARCH_MAX)
            .find(|&k| self.strip_unchecked(k).is_some())
            .ok_or(ModelError::EmptyStrip(K_SEARCH_MAX))
    }

    /// Strip bounded in the unstable direction by the preimages of the
    /// planes `Theta_j`, valid when `K delta_j < rho / 10`.
    pub fn resized_strip(&self, j: usize, k: usize, theta: &ThetaPlanes) -> Result<Strip, ModelError> {
        if self.dims.n != 1 {
            return Err(ModelError::WrongCodimension(self.dims.n));
        }
        let [lower, upper] = *theta
            .pairs
            .get(j)
            .ok_or_else(|| ModelError::InvalidModel(format!("no theta pair {j}")))?;
        let iy = self.dims.y().start;
        let ym = self.y_minus[iy];
        if !(lower < ym && ym < upper) {
            return Err(ModelError::InvalidModel(
                "theta levels must surround y_minus".into(),
            ));
        }
        let margin = 10.0 * self.calibration.k * (upper - lower) / theta.rho;
        if !(margin < 1.0) {
            return Err(ModelError::QuantifierViolation(margin));
        }
        let mut s = self.strip(k)?;
        let g = self.c[(0, 0)].powi(k as i32);
        let levels = Interval::new(lower, upper).scale(1.0 / g);
        let y = s.box_plus.interval(iy).intersect(&levels);
        let ym_iv = s.box_minus.interval(iy).intersect(&Interval::new(lower, upper));
        if y.is_empty() || ym_iv.is_empty() {
            return Err(ModelError::EmptyStrip(k));
        }
        s.box_plus.lo[iy] = y.lo;
        s.box_plus.hi[iy] = y.hi;
        s.box_minus.lo[iy] = ym_iv.lo;
        s.box_minus.hi[iy] = ym_iv.hi;
        let s_faces = vec![
            Face {
                coord: iy,
                value: levels.lo,
            },
            Face {
                coord: iy,
                value: levels.hi,
            },
        ];
        let u_faces = (0..self.dims.total())
            .filter(|&c| c != iy)
            .flat_map(|c| {
                [
                    Face {
                        coord: c,
                        value: s.box_plus.lo[c],
                    },
                    Face {
                        coord: c,
                        value: s.box_plus.hi[c],
                    },
                ]
            })
            .collect();
        s.s_boundary = Some(s_faces);
        s.u_boundary = Some(u_faces);
        s.quantifier_margin = Some(margin);
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::scalar_model;
    use super::*;

    fn model(gamma: f64) -> LocalTangencyModel {
        scalar_model(0.1, 0.5, gamma, &[("B3", 1.0), ("C2", 1.0)], 1.0)
    }

    #[test]
    fn y_halfwidth_scales_by_gamma_power() {
        let m = model(2.0);
        let k0 = m.k0().unwrap();
        for k in k0..k0 + 5 {
            let s = m.strip(k).unwrap();
            // Pi- y-halfwidth 0.1 around 1
            let iv = s.box_plus.interval(2);
            assert!((iv.radius() - 0.1 * 2f64.powi(-(k as i32))).abs() < 1e-15);
            assert!((iv.mid() - 2f64.powi(-(k as i32))).abs() < 1e-15);
        }
    }

    #[test]
    fn below_k0_is_empty() {
        let m = model(2.0);
        let k0 = m.k0().unwrap();
        assert_eq!(k0, 4);
        assert_eq!(m.strip(k0 - 1), Err(ModelError::EmptyStrip(k0 - 1)));
        assert_eq!(m.strip(0), Err(ModelError::EmptyStrip(0)));
    }

    #[test]
    fn successive_u_diameters_ratio_is_inverse_gamma() {
        let m = model(3.0);
        let k0 = m.k0().unwrap();
        for k in k0..k0 + 6 {
            let a = m.strip(k).unwrap().diam_u(&m);
            let b = m.strip(k + 1).unwrap().diam_u(&m);
            assert!((b / a - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn box_minus_is_the_image_of_box_plus() {
        let m = model(2.0);
        let s = m.strip(5).unwrap();
        for c in s.box_plus.corners() {
            let q = m.apply_t0(&c, 5).unwrap();
            assert!(s.box_minus.contains_with_tol(q.as_slice(), 1e-12));
        }
        assert!(m.pi_plus.contains_box(&s.box_plus));
        assert!(m.pi_minus.contains_box(&s.box_minus));
    }

    #[test]
    fn resized_strip_quantifiers() {
        let m = model(2.0);
        let k = m.calibration.k;
        let rho = 0.45;
        let delta = rho / (20.0 * k);
        let th = ThetaPlanes {
            pairs: vec![[1.0 - delta / 2.0, 1.0 + delta / 2.0]],
            rho,
        };
        let s = m.resized_strip(0, 10, &th).unwrap();
        assert!((s.quantifier_margin.unwrap() - 0.5).abs() < 1e-12);
        assert!((s.diam_u(&m) - delta * 2f64.powi(-10)).abs() < 1e-15);
        assert!(s.diam_c(&m) > rho);
        let bad = ThetaPlanes {
            pairs: vec![[1.0 - rho / (10.0 * k), 1.0 + rho / (10.0 * k)]],
            rho,
        };
        assert!(matches!(
            m.resized_strip(0, 10, &bad),
            Err(ModelError::QuantifierViolation(_))
        ));
    }
}
