//! Disks tangent to the `ss`-cone that cross the reference box.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Blender, BlenderError};

const TANGENT_STEP: f64 = 1e-5;
const CROSSING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coords {
    One(f64),
    Many(Vec<f64>),
}

impl Coords {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Coords::One(x) => vec![*x],
            Coords::Many(v) => v.clone(),
        }
    }
}

/// Disk file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiskSpec {
    /// The `ss`-plane through the given central coordinates and the `uu`
    /// coordinates of the distinctive saddle.
    VerticalAt(Coords),
    /// `p(s) = origin + sum_j s_j frame_j` for `s` in the unit cube.
    Affine { origin: Vec<f64>, frame: Vec<Vec<f64>> },
    /// Tensor grid of points, interpolated multilinearly; one row for
    /// one-dimensional disks.
    Grid(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq)]
enum Param {
    Affine { origin: DVector<f64>, frame: Vec<DVector<f64>> },
    Grid { rows: Vec<Vec<DVector<f64>>> },
}

/// A validated disk `p : [0,1]^{d_ss} -> U`.
#[derive(Debug, Clone, PartialEq)]
pub struct SsDisk {
    param: Param,
    d_ss: usize,
    /// Largest angle between a sampled tangent frame and the `ss`-plane.
    pub tangent_bound: f64,
}

fn unit_grid(d: usize, per_dim: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for p in &out {
            for i in 0..per_dim {
                let mut q = p.clone();
                q.push(i as f64 / (per_dim - 1) as f64);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

impl SsDisk {
    pub fn from_spec(spec: &DiskSpec, blender: &Blender) -> Result<SsDisk, BlenderError> {
        let n = blender.dim();
        let d_ss = blender.d_ss;
        let param = match spec {
            DiskSpec::VerticalAt(c) => {
                let c = c.to_vec();
                if c.len() != blender.d_cs {
                    return Err(BlenderError::InvalidDisk("central coordinates have the wrong length".into()));
                }
                let saddle = blender.distinctive_saddle();
                let ss = blender.ss_box();
                let mut origin = saddle.clone();
                for j in 0..d_ss {
                    origin[j] = ss.lo[j];
                }
                for (q, x) in c.iter().enumerate() {
                    origin[d_ss + q] = *x;
                }
                let frame = (0..d_ss)
                    .map(|j| {
                        let mut v = DVector::zeros(n);
                        v[j] = ss.hi[j] - ss.lo[j];
                        v
                    })
                    .collect();
                Param::Affine { origin, frame }
            }
            DiskSpec::Affine { origin, frame } => {
                if origin.len() != n || frame.len() != d_ss || frame.iter().any(|v| v.len() != n) {
                    return Err(BlenderError::InvalidDisk("affine disk has the wrong shape".into()));
                }
                Param::Affine {
                    origin: DVector::from_column_slice(origin),
                    frame: frame.iter().map(|v| DVector::from_column_slice(v)).collect(),
                }
            }
            DiskSpec::Grid(rows) => {
                let ok_shape = match d_ss {
                    1 => rows.len() == 1 && rows[0].len() >= 2,
                    2 => rows.len() >= 2 && rows.iter().all(|r| r.len() == rows[0].len() && r.len() >= 2),
                    _ => false,
                };
                if !ok_shape || rows.iter().flatten().any(|p| p.len() != n) {
                    return Err(BlenderError::InvalidDisk(
                        "grid disks need one row (d_ss = 1) or a rectangular table (d_ss = 2) of points".into(),
                    ));
                }
                Param::Grid {
                    rows: rows
                        .iter()
                        .map(|r| r.iter().map(|p| DVector::from_column_slice(p)).collect())
                        .collect(),
                }
            }
        };
        let mut disk = SsDisk {
            param,
            d_ss,
            tangent_bound: 0.0,
        };
        disk.validate(blender)?;
        Ok(disk)
    }

    pub fn d_ss(&self) -> usize {
        self.d_ss
    }

    pub fn point(&self, s: &[f64]) -> DVector<f64> {
        match &self.param {
            Param::Affine { origin, frame } => {
                let mut p = origin.clone();
                for (v, sj) in frame.iter().zip(s) {
                    p += v * *sj;
                }
                p
            }
            Param::Grid { rows } => {
                let lerp = |row: &Vec<DVector<f64>>, t: f64| {
                    let m = row.len() - 1;
                    let x = t.clamp(0.0, 1.0) * m as f64;
                    let i = (x.floor() as usize).min(m - 1);
                    let f = x - i as f64;
                    &row[i] * (1.0 - f) + &row[i + 1] * f
                };
                if self.d_ss == 1 {
                    return lerp(&rows[0], s[0]);
                }
                let m = rows.len() - 1;
                let x = s[0].clamp(0.0, 1.0) * m as f64;
                let i = (x.floor() as usize).min(m - 1);
                let f = x - i as f64;
                lerp(&rows[i], s[1]) * (1.0 - f) + lerp(&rows[i + 1], s[1]) * f
            }
        }
    }

    /// Tangent vectors `dp/ds_j` by central differences with step `1e-5`,
    /// one-sided at the boundary of the unit cube.
    pub fn tangents(&self, s: &[f64]) -> Vec<DVector<f64>> {
        (0..self.d_ss)
            .map(|j| {
                let mut a = s.to_vec();
                let mut b = s.to_vec();
                a[j] = (s[j] - TANGENT_STEP).max(0.0);
                b[j] = (s[j] + TANGENT_STEP).min(1.0);
                (self.point(&b) - self.point(&a)) / (b[j] - a[j])
            })
            .collect()
    }

    /// Angle of the tangent frame at `s` to the `ss`-plane.
    pub fn angle_at(&self, s: &[f64]) -> f64 {
        self.tangents(s)
            .iter()
            .map(|v| {
                let ss = v.rows(0, self.d_ss).norm();
                let rest = v.rows(self.d_ss, v.len() - self.d_ss).norm();
                rest.atan2(ss)
            })
            .fold(0.0, f64::max)
    }

    fn validate(&mut self, blender: &Blender) -> Result<(), BlenderError> {
        let per_dim = if self.d_ss == 1 { 65 } else { 17 };
        let ss = blender.ss_box();
        let mut bound: f64 = 0.0;
        for s in unit_grid(self.d_ss, per_dim) {
            let p = self.point(&s);
            if !blender.reference.contains_with_tol(p.as_slice(), CROSSING_TOL) {
                return Err(BlenderError::InvalidDisk(format!("disk leaves U at s = {s:?}")));
            }
            for j in 0..self.d_ss {
                let face = if s[j] == 0.0 {
                    Some(ss.lo[j])
                } else if s[j] == 1.0 {
                    Some(ss.hi[j])
                } else {
                    None
                };
                if let Some(f) = face {
                    if (p[j] - f).abs() > CROSSING_TOL {
                        return Err(BlenderError::InvalidDisk("disk does not cross U in the ss-direction".into()));
                    }
                }
            }
            bound = bound.max(self.angle_at(&s));
        }
        if bound >= blender.cone_half_angle {
            return Err(BlenderError::InvalidDisk(format!(
                "tangent angle {bound} is not below the cone half-angle {}",
                blender.cone_half_angle
            )));
        }
        self.tangent_bound = bound;
        Ok(())
    }

    /// Parameter `s` with `p(s)_ss = target`, by Newton's method started
    /// from the unit coordinates of `target` in the `ss`-box.
    pub fn solve_ss(&self, blender: &Blender, target: &DVector<f64>) -> Vec<f64> {
        let ss = blender.ss_box();
        let mut s: Vec<f64> = (0..self.d_ss)
            .map(|j| ((target[j] - ss.lo[j]) / (ss.hi[j] - ss.lo[j])).clamp(0.0, 1.0))
            .collect();
        for _ in 0..50 {
            let p = self.point(&s);
            let r = target - p.rows(0, self.d_ss);
            if r.amax() <= 1e-15 {
                break;
            }
            let t = self.tangents(&s);
            let jac = DMatrix::from_fn(self.d_ss, self.d_ss, |i, j| t[j][i]);
            let Some(step) = jac.lu().solve(&r) else { break };
            for j in 0..self.d_ss {
                s[j] = (s[j] + step[j]).clamp(0.0, 1.0);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn vertical_disk_is_flat() {
        let b = presets::two_branch_blender(0.7, 0.3);
        let d = SsDisk::from_spec(&DiskSpec::VerticalAt(Coords::One(0.5)), &b).unwrap();
        assert_eq!(d.tangent_bound, 0.0);
        assert_eq!(d.point(&[0.5]).as_slice(), &[0.0, 0.5, 0.15]);
    }

    #[test]
    fn steep_disk_is_rejected() {
        let b = presets::two_branch_blender(0.7, 0.3);
        let spec = DiskSpec::Affine {
            origin: vec![-1.0, 0.1, 0.5],
            frame: vec![vec![2.0, 0.8, 0.0]],
        };
        assert!(matches!(SsDisk::from_spec(&spec, &b), Err(BlenderError::InvalidDisk(_))));
    }

    #[test]
    fn short_disk_is_rejected() {
        let b = presets::two_branch_blender(0.7, 0.3);
        let spec = DiskSpec::Affine {
            origin: vec![-0.5, 0.2, 0.5],
            frame: vec![vec![1.0, 0.0, 0.0]],
        };
        assert!(matches!(SsDisk::from_spec(&spec, &b), Err(BlenderError::InvalidDisk(_))));
    }

    #[test]
    fn grid_disk_interpolates() {
        let b = presets::two_branch_blender(0.7, 0.3);
        let row: Vec<Vec<f64>> = (0..=10)
            .map(|i| {
                let s = i as f64 / 10.0;
                vec![-1.0 + 2.0 * s, 0.4 + 0.05 * s, 0.5]
            })
            .collect();
        let d = SsDisk::from_spec(&DiskSpec::Grid(vec![row]), &b).unwrap();
        assert!((d.tangent_bound - (0.05f64 / 2.0).atan()).abs() < 1e-9);
        let s = d.solve_ss(&b, &DVector::from_column_slice(&[0.3]));
        assert!((d.point(&s)[0] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn disk_json_forms() {
        let v: DiskSpec = serde_json::from_str(r#"{"vertical_at": 0.5}"#).unwrap();
        assert_eq!(v, DiskSpec::VerticalAt(Coords::One(0.5)));
        let v: DiskSpec = serde_json::from_str(r#"{"grid": [[[0,0,0],[1,0,0]]]}"#).unwrap();
        assert!(matches!(v, DiskSpec::Grid(_)));
    }
}
