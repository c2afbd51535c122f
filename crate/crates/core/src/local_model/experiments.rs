//! Volume and diameter expansion of center-unstable disks under the return
//! map.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LocalTangencyModel, ModelError, Strip};
use crate::geometry::BoxN;
use crate::linalg::{from_rows, operator_norm, to_rows};

/// An `(m_s + n)`-disk given as a graph `u = u(c)` over a box of central
/// coordinates `c = (x, y, v)`:
/// `u(c) = u0 + slope (c - c_mid) + curvature |c - c_mid|^2 (1, ..., 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDisk {
    pub base: BoxN,
    pub u0: Vec<f64>,
    #[serde(default)]
    pub slope: Vec<Vec<f64>>,
    #[serde(default)]
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub k: usize,
    pub ratio: f64,
    /// Ratio on the coarse grid; `richardson_error` is the difference.
    pub ratio_coarse: f64,
    pub richardson_error: f64,
    pub l_used: f64,
    pub bound: f64,
    pub bound_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterReport {
    pub k: usize,
    pub diam_u: f64,
    pub diam_c_out: f64,
    pub k_used: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Grid sizes for the volume quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub coarse: usize,
    pub fine: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            coarse: 64,
            fine: 128,
        }
    }
}

const DIAMETER_SAMPLES: usize = 17;
const CONE_SAMPLES: usize = 5;

impl GraphDisk {
    fn slope_matrix(&self, du: usize) -> DMatrix<f64> {
        from_rows(&self.slope, self.base.dim())
            .ok()
            .filter(|s| s.nrows() == du)
            .unwrap_or_else(|| DMatrix::zeros(du, self.base.dim()))
    }

    /// Point of the disk over central coordinates `c`.
    pub fn point(&self, c: &DVector<f64>) -> DVector<f64> {
        let du = self.u0.len();
        let d = c - self.base.center();
        let u = DVector::from_vec(self.u0.clone())
            + self.slope_matrix(du) * &d
            + DVector::from_element(du, self.curvature * d.norm_squared());
        DVector::from_iterator(du + c.len(), u.iter().chain(c.iter()).cloned())
    }

    /// Tangent frame (columns) at central coordinates `c`.
    pub fn tangent(&self, c: &DVector<f64>) -> DMatrix<f64> {
        let du = self.u0.len();
        let dc = c.len();
        let d = c - self.base.center();
        let mut u = self.slope_matrix(du);
        for i in 0..du {
            for j in 0..dc {
                u[(i, j)] += 2.0 * self.curvature * d[j];
            }
        }
        let mut g = DMatrix::zeros(du + dc, dc);
        g.view_mut((0, 0), (du, dc)).copy_from(&u);
        g.view_mut((du, 0), (dc, dc)).fill_with_identity();
        g
    }

    /// The flat disk `u = 0` over the central part of the strip.
    pub fn flat_over(model: &LocalTangencyModel, strip: &Strip) -> GraphDisk {
        let c = model.dims.central();
        GraphDisk {
            base: strip.box_plus.slice(c.start, c.len()),
            u0: vec![0.0; model.dims.du()],
            slope: vec![],
            curvature: 0.0,
        }
    }

    /// Random disk inside a strip with every central extent at least
    /// `min_fraction` of the strip's and slopes inside the cone.
    pub fn random_in<R: Rng>(
        model: &LocalTangencyModel,
        strip: &Strip,
        min_fraction: f64,
        rng: &mut R,
    ) -> GraphDisk {
        let dims = model.dims;
        let du = dims.du();
        let dc = dims.central().len();
        let bx = &strip.box_plus;
        let tan = model.cone_half_angle.tan();
        loop {
            let mut lo = Vec::with_capacity(dc);
            let mut hi = Vec::with_capacity(dc);
            for c in dims.central() {
                let iv = bx.interval(c);
                let w = iv.width() * rng.gen_range(min_fraction..=1.0);
                let start = iv.lo + rng.gen_range(0.0..=1.0) * (iv.width() - w);
                lo.push(start);
                hi.push(start + w);
            }
            let ubox = bx.slice(0, du);
            let u0: Vec<f64> = (0..du)
                .map(|i| {
                    let iv = ubox.interval(i);
                    iv.mid() + 0.25 * iv.radius() * rng.gen_range(-1.0..=1.0)
                })
                .collect();
            let scale = 0.5 * tan / ((du * dc).max(1) as f64).sqrt();
            let slope = (0..du)
                .map(|_| (0..dc).map(|_| scale * rng.gen_range(-1.0..=1.0)).collect())
                .collect();
            let disk = GraphDisk {
                base: BoxN::new(lo, hi),
                u0,
                slope,
                curvature: 0.01 * rng.gen_range(-1.0..=1.0),
            };
            if disk.validate(model, strip).is_ok() {
                return disk;
            }
        }
    }

    fn grid_points(&self, n: usize, midpoint: bool) -> Vec<DVector<f64>> {
        let d = self.base.dim();
        let total = n.pow(d as u32);
        (0..total)
            .map(|mut flat| {
                let s: Vec<f64> = (0..d)
                    .map(|_| {
                        let i = flat % n;
                        flat /= n;
                        if midpoint {
                            (i as f64 + 0.5) / n as f64
                        } else if n == 1 {
                            0.5
                        } else {
                            i as f64 / (n - 1) as f64
                        }
                    })
                    .collect();
                self.base.at_unit(&s)
            })
            .collect()
    }

    /// Checks that the disk lies in the strip and is tangent to the
    /// center-unstable cone.
    pub fn validate(&self, model: &LocalTangencyModel, strip: &Strip) -> Result<(), ModelError> {
        let dims = model.dims;
        if self.base.dim() != dims.central().len() || self.u0.len() != dims.du() {
            return Err(ModelError::DegenerateDisk("dimension mismatch".into()));
        }
        if self.base.widths().iter().any(|&w| !(w > 0.0)) {
            return Err(ModelError::DegenerateDisk("base box has zero extent".into()));
        }
        let tan = model.cone_half_angle.tan();
        for c in self.grid_points(CONE_SAMPLES, false) {
            let p = self.point(&c);
            if !strip.box_plus.contains_with_tol(p.as_slice(), 1e-12) {
                return Err(ModelError::OutsideStrip(strip.k));
            }
            let g = self.tangent(&c);
            let u = g.view((0, 0), (dims.du(), g.ncols())).into_owned();
            let slope = operator_norm(&u);
            if slope >= tan {
                return Err(ModelError::ConeViolation {
                    angle: slope.atan(),
                    half_angle: model.cone_half_angle,
                });
            }
        }
        Ok(())
    }

    pub fn with_slope(mut self, slope: &DMatrix<f64>) -> Self {
        self.slope = to_rows(slope);
        self
    }
}

fn gram_volume(g: &DMatrix<f64>) -> f64 {
    (g.transpose() * g).determinant().max(0.0).sqrt()
}

impl LocalTangencyModel {
    fn volume_ratio(&self, k: usize, disk: &GraphDisk, n: usize) -> Result<f64, ModelError> {
        let cell = disk.base.volume() / (n.pow(disk.base.dim() as u32) as f64);
        let terms: Vec<Result<(f64, f64), ModelError>> = disk
            .grid_points(n, true)
            .par_iter()
            .map(|c| {
                let g = disk.tangent(c);
                let j = self.return_jacobian(k, &disk.point(c))?;
                Ok((gram_volume(&g), gram_volume(&(j * &g))))
            })
            .collect();
        let (mut vin, mut vout) = (0.0, 0.0);
        for t in terms {
            let (a, b) = t?;
            vin += a * cell;
            vout += b * cell;
        }
        if !(vin > 0.0) {
            return Err(ModelError::DegenerateDisk("zero volume".into()));
        }
        Ok(vout / vin)
    }

    /// Ratio `vol(R_k(disk)) / vol(disk)` against `L J_P^k`.
    pub fn volume_expansion_experiment(
        &self,
        k: usize,
        disk: &GraphDisk,
        quad: Quadrature,
    ) -> Result<VolumeReport, ModelError> {
        let strip = self.strip(k)?;
        disk.validate(self, &strip)?;
        let coarse = self.volume_ratio(k, disk, quad.coarse)?;
        let fine = self.volume_ratio(k, disk, quad.fine)?;
        let l = self.calibration.l;
        let bound = l * self.leading_jacobian().powi(k as i32);
        Ok(VolumeReport {
            k,
            ratio: fine,
            ratio_coarse: coarse,
            richardson_error: (fine - coarse).abs(),
            l_used: l,
            bound,
            bound_ok: fine > bound,
        })
    }

    /// Compares the c-diameter of `R_k(disk)` with `K gamma^k diam_u(disk)`.
    pub fn diameter_experiment(&self, k: usize, disk: &GraphDisk) -> Result<DiameterReport, ModelError> {
        let dims = self.dims;
        if dims.n != 1 {
            return Err(ModelError::WrongCodimension(dims.n));
        }
        let strip = self.strip(k)?;
        disk.validate(self, &strip)?;
        let iy = dims.y().start - dims.du();
        let diam_u = disk.base.interval(iy).width();
        let xs = dims.x();
        let images: Vec<DVector<f64>> = disk
            .grid_points(DIAMETER_SAMPLES, false)
            .iter()
            .map(|c| {
                let p = self.return_map_raw(k, &disk.point(c))?;
                Ok(p.rows(xs.start, xs.len()).into_owned())
            })
            .collect::<Result<_, ModelError>>()?;
        let mut diam_c_out: f64 = 0.0;
        for (i, a) in images.iter().enumerate() {
            for b in &images[i + 1..] {
                diam_c_out = diam_c_out.max((a - b).norm());
            }
        }
        let k_used = self.calibration.k;
        let bound = k_used * self.gamma.powi(k as i32) * diam_u;
        Ok(DiameterReport {
            k,
            diam_u,
            diam_c_out,
            k_used,
            bound,
            ok: diam_c_out < bound,
        })
    }
}
