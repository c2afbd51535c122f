//! Blenders that are local products of a contraction with a planar
//! repeller whose unstable lamination fills the disk.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::disk::SsDisk;
use super::{Blender, BlenderError, BlenderSpec, BlockLinear, BranchSpec, Orientation};
use crate::geometry::BoxN;

/// Affine branch `(y, z) -> (y_rate y + y_offset, z_rate z + z_offset)` of
/// a planar map on `[0, 1]^2`, defined on the strip of `z` mapped into
/// `[0, 1]`. `y` is the contracting direction, `z` the expanding one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarBranch {
    pub y_rate: f64,
    pub y_offset: f64,
    pub z_rate: f64,
    pub z_offset: f64,
}

impl PlanarBranch {
    fn z_domain(&self) -> (f64, f64) {
        let a = -self.z_offset / self.z_rate;
        let b = (1.0 - self.z_offset) / self.z_rate;
        (a.min(b), a.max(b))
    }
}

/// A planar hyperbolic set on `[0, 1]^2` given by affine branches. Local
/// unstable manifolds are the vertical segments over the attractor of the
/// `y`-maps.
pub trait PlanarRepeller: Send + Sync {
    fn branches(&self) -> Vec<PlanarBranch>;

    /// Smallest contraction or expansion rate among the branches.
    fn min_rate(&self) -> f64 {
        self.branches()
            .iter()
            .map(|b| b.y_rate.abs().min(b.z_rate.abs()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Images of `[0, 1]` under all `y`-compositions of the level at which
    /// every image is shorter than `resolution`, sorted.
    fn lamination_cover(&self, resolution: f64) -> Vec<(f64, f64)> {
        let maps: Vec<(f64, f64)> = self.branches().iter().map(|b| (b.y_rate, b.y_offset)).collect();
        let mut ivs = vec![(0.0, 1.0)];
        while ivs.iter().any(|(a, b)| b - a >= resolution) && ivs.len() < 1 << 22 {
            ivs = ivs
                .iter()
                .flat_map(|&(lo, hi)| {
                    maps.iter().map(move |&(r, o)| {
                        let (a, b) = (r * lo + o, r * hi + o);
                        (a.min(b), a.max(b))
                    })
                })
                .collect();
        }
        ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
        ivs
    }

    /// Largest gap in `[0, 1]` left by [`PlanarRepeller::lamination_cover`].
    fn lamination_gap(&self, resolution: f64) -> f64 {
        let mut covered: f64 = 0.0;
        let mut gap: f64 = 0.0;
        for (lo, hi) in self.lamination_cover(resolution) {
            gap = gap.max(lo - covered);
            covered = covered.max(hi);
        }
        gap.max(1.0 - covered)
    }
}

/// Affine repeller surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineRepeller {
    pub branches: Vec<PlanarBranch>,
}

impl AffineRepeller {
    /// `(y, z) -> ((y + j) / n, n z - j)`: the unstable segments fill the
    /// square.
    pub fn filling(n: usize) -> AffineRepeller {
        let r = n as f64;
        AffineRepeller {
            branches: (0..n)
                .map(|j| PlanarBranch {
                    y_rate: 1.0 / r,
                    y_offset: j as f64 / r,
                    z_rate: r,
                    z_offset: -(j as f64),
                })
                .collect(),
        }
    }

    /// `(y, z) -> ((y + 2j) / (2n - 1), n z - j)`: the `y`-attractor is a
    /// Cantor set with gaps of size `1 / (2n - 1)`.
    pub fn cantor(n: usize) -> AffineRepeller {
        let r = n as f64;
        let q = 2.0 * r - 1.0;
        AffineRepeller {
            branches: (0..n)
                .map(|j| PlanarBranch {
                    y_rate: 1.0 / q,
                    y_offset: 2.0 * j as f64 / q,
                    z_rate: r,
                    z_offset: -(j as f64),
                })
                .collect(),
        }
    }
}

impl PlanarRepeller for AffineRepeller {
    fn branches(&self) -> Vec<PlanarBranch> {
        self.branches.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceWitness {
    pub point: Vec<f64>,
    pub param: Vec<f64>,
    /// `|x|` at the point plus the distance of its `y` coordinate to the
    /// lamination cover.
    pub residual: f64,
}

/// `(x, y, z) -> (gamma x, h(y, z))` on `[-1, 1]^ss_dim x [0, 1]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductBlender {
    pub blender: Blender,
    pub resolution: f64,
    cover: Vec<(f64, f64)>,
}

/// Builds the product blender; the distinctive branch is the first one
/// whose fixed point lies in the interior of its strip.
pub fn product_blender(
    repeller: &dyn PlanarRepeller,
    gamma: f64,
    ss_dim: usize,
    resolution: f64,
) -> Result<ProductBlender, BlenderError> {
    let min_rate = repeller.min_rate();
    if !(gamma > 0.0 && gamma < min_rate) {
        return Err(BlenderError::RateViolation { gamma, min_rate });
    }
    if !(resolution > 0.0) {
        return Err(BlenderError::InvalidSpec("resolution must be positive".into()));
    }
    let gap = repeller.lamination_gap(resolution);
    if gap > resolution {
        return Err(BlenderError::LaminationGap(gap));
    }
    let branches = repeller.branches();
    let total = ss_dim + 2;
    let mut lo = vec![-1.0; ss_dim];
    lo.extend([0.0, 0.0]);
    let mut hi = vec![1.0; ss_dim];
    hi.extend([1.0, 1.0]);
    let reference = BoxN::new(lo, hi);
    let eye = |d: usize, a: f64| -> Vec<Vec<f64>> {
        (0..d).map(|i| (0..d).map(|j| if i == j { a } else { 0.0 }).collect()).collect()
    };
    let mut distinctive = None;
    let specs: Vec<BranchSpec> = branches
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let (z0, z1) = b.z_domain();
            let zf = b.z_offset / (1.0 - b.z_rate);
            let yf = b.y_offset / (1.0 - b.y_rate);
            if distinctive.is_none() && z0 < zf && zf < z1 && (0.0..=1.0).contains(&yf) {
                distinctive = Some(j);
            }
            let mut domain = reference.clone();
            domain.lo[total - 1] = z0;
            domain.hi[total - 1] = z1;
            let mut offset = vec![0.0; ss_dim];
            offset.extend([b.y_offset, b.z_offset]);
            BranchSpec {
                linear: BlockLinear {
                    ss: eye(ss_dim, gamma),
                    central: vec![vec![b.y_rate]],
                    uu: vec![vec![b.z_rate]],
                },
                offset,
                domain,
            }
        })
        .collect();
    let distinctive =
        distinctive.ok_or_else(|| BlenderError::InvalidSpec("no branch has an interior fixed point".into()))?;
    let spec = BlenderSpec {
        d_ss: ss_dim,
        d_cs: 1,
        d_uu: 1,
        reference,
        branches: specs,
        distinctive,
        orientation: Orientation::Cs,
        cone_half_angle: 0.3,
    };
    Ok(ProductBlender {
        blender: Blender::from_spec(&spec)?,
        resolution,
        cover: repeller.lamination_cover(resolution),
    })
}

impl ProductBlender {
    /// Point where `disk` meets the slice `{x = 0}`, which is filled by
    /// local unstable manifolds up to the resolution.
    pub fn slice_witness(&self, disk: &SsDisk) -> SliceWitness {
        let b = &self.blender;
        let s = disk.solve_ss(b, &DVector::zeros(b.d_ss));
        let p = disk.point(&s);
        let y = p[b.d_ss];
        let dist = self
            .cover
            .iter()
            .map(|&(lo, hi)| (lo - y).max(y - hi).max(0.0))
            .fold(f64::INFINITY, f64::min);
        SliceWitness {
            point: p.iter().cloned().collect(),
            param: s,
            residual: p.rows(0, b.d_ss).amax() + dist,
        }
    }
}
