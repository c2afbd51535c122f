//! Affine blender-horseshoes: covering, superposition, robustness, product
//! blenders over planar repellers and tangencies with unstable foliations.
//!
//! Ambient coordinates are ordered `(ss, central, uu)`. Every branch is an
//! affine map whose linear part is block diagonal in this splitting, with a
//! diagonal central block. Branch domains span the reference box `U` in the
//! `ss` and central coordinates and are disjoint slabs in the `uu`
//! coordinates.

pub mod covering;
pub mod disk;
pub mod product;
pub mod superposition;
pub mod tangency;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoxN;
use crate::linalg::{block_diag, from_rows, is_diagonal, min_singular_value, operator_norm, to_rows};

pub use covering::{covering_criterion, perturbation_trials, robustness_margin, CoveringReport, RobustnessReport};
pub use disk::{Coords, DiskSpec, SsDisk};
pub use product::{product_blender, AffineRepeller, PlanarBranch, PlanarRepeller, ProductBlender};
pub use superposition::{reduce_central_dimension, verify_superposition, Witness};
pub use tangency::{tangency_witness, ClosedCurve, Foliation, LinearFoliation, TrigCurve};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BlenderError {
    #[error("invalid blender spec: {0}")]
    InvalidSpec(String),
    #[error("invalid ss-disk: {0}")]
    InvalidDisk(String),
    #[error("no branch image contains the disk at depth {depth}")]
    CoverageGap { depth: usize, central: Vec<f64> },
    #[error("central rates are not strictly ordered")]
    NotDominated,
    #[error("contraction {gamma} is not below the repeller rate {min_rate}")]
    RateViolation { gamma: f64, min_rate: f64 },
    #[error("unstable lamination leaves a gap of {0}")]
    LaminationGap(f64),
    #[error("foliation gradient vanishes on the curve at t = {0}")]
    DegenerateFoliation(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Central coordinates are contracted.
    #[default]
    Cs,
    /// The branches describe the inverse of a map with a `cu`-blender; the
    /// analysis is that of the `cs`-blender of the inverse.
    Cu,
}

/// Block-diagonal linear part in row-major form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLinear {
    pub ss: Vec<Vec<f64>>,
    pub central: Vec<Vec<f64>>,
    pub uu: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub linear: BlockLinear,
    pub offset: Vec<f64>,
    pub domain: BoxN,
}

fn default_cone() -> f64 {
    0.3
}

/// Blender file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlenderSpec {
    pub d_ss: usize,
    pub d_cs: usize,
    pub d_uu: usize,
    pub reference: BoxN,
    pub branches: Vec<BranchSpec>,
    /// Branch whose fixed point is the distinctive saddle.
    #[serde(default)]
    pub distinctive: usize,
    #[serde(default)]
    pub orientation: Orientation,
    /// Half-angle of the cone around the `ss`-plane admitted for disks.
    #[serde(default = "default_cone")]
    pub cone_half_angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub ss: DMatrix<f64>,
    /// Diagonal of the central block.
    pub central: DVector<f64>,
    pub uu: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub domain: BoxN,
}

impl Branch {
    pub fn linear(&self) -> DMatrix<f64> {
        block_diag(&[&self.ss, &DMatrix::from_diagonal(&self.central), &self.uu])
    }
}

/// Validated blender.
#[derive(Debug, Clone, PartialEq)]
pub struct Blender {
    pub d_ss: usize,
    pub d_cs: usize,
    pub d_uu: usize,
    pub reference: BoxN,
    pub branches: Vec<Branch>,
    pub distinctive: usize,
    pub orientation: Orientation,
    pub cone_half_angle: f64,
}

const DOMAIN_TOL: f64 = 1e-12;

fn invalid<T>(msg: impl Into<String>) -> Result<T, BlenderError> {
    Err(BlenderError::InvalidSpec(msg.into()))
}

impl Blender {
    pub fn from_spec(spec: &BlenderSpec) -> Result<Blender, BlenderError> {
        let total = spec.d_ss + spec.d_cs + spec.d_uu;
        if spec.d_ss == 0 || spec.d_cs == 0 || spec.d_uu == 0 {
            return invalid("all of d_ss, d_cs, d_uu must be positive");
        }
        if spec.reference.dim() != total || spec.reference.is_empty() {
            return invalid("reference box has the wrong dimension or is empty");
        }
        let mut branches = Vec::with_capacity(spec.branches.len());
        for (i, b) in spec.branches.iter().enumerate() {
            let mat = |rows: &Vec<Vec<f64>>, d: usize, name: &str| -> Result<DMatrix<f64>, BlenderError> {
                let m = from_rows(rows, d).map_err(BlenderError::InvalidSpec)?;
                if m.nrows() != d || m.ncols() != d {
                    return invalid(format!("branch {i}: {name} block must be {d}x{d}"));
                }
                Ok(m)
            };
            let ss = mat(&b.linear.ss, spec.d_ss, "ss")?;
            let central = mat(&b.linear.central, spec.d_cs, "central")?;
            let uu = mat(&b.linear.uu, spec.d_uu, "uu")?;
            if !is_diagonal(&central) {
                return invalid(format!("branch {i}: central block must be diagonal"));
            }
            if b.offset.len() != total || b.domain.dim() != total {
                return invalid(format!("branch {i}: offset or domain has the wrong dimension"));
            }
            branches.push(Branch {
                ss,
                central: central.diagonal(),
                uu,
                offset: DVector::from_column_slice(&b.offset),
                domain: b.domain.clone(),
            });
        }
        let blender = Blender {
            d_ss: spec.d_ss,
            d_cs: spec.d_cs,
            d_uu: spec.d_uu,
            reference: spec.reference.clone(),
            branches,
            distinctive: spec.distinctive,
            orientation: spec.orientation,
            cone_half_angle: spec.cone_half_angle,
        };
        blender.validate()?;
        Ok(blender)
    }

    pub fn to_spec(&self) -> BlenderSpec {
        BlenderSpec {
            d_ss: self.d_ss,
            d_cs: self.d_cs,
            d_uu: self.d_uu,
            reference: self.reference.clone(),
            branches: self
                .branches
                .iter()
                .map(|b| BranchSpec {
                    linear: BlockLinear {
                        ss: to_rows(&b.ss),
                        central: to_rows(&DMatrix::from_diagonal(&b.central)),
                        uu: to_rows(&b.uu),
                    },
                    offset: b.offset.iter().cloned().collect(),
                    domain: b.domain.clone(),
                })
                .collect(),
            distinctive: self.distinctive,
            orientation: self.orientation,
            cone_half_angle: self.cone_half_angle,
        }
    }

    fn validate(&self) -> Result<(), BlenderError> {
        if self.branches.is_empty() {
            return invalid("no branches");
        }
        if !(self.cone_half_angle > 0.0 && self.cone_half_angle < std::f64::consts::FRAC_PI_2) {
            return invalid("cone half-angle must lie in (0, pi/2)");
        }
        let (ss_box, c_box, uu_box) = (self.ss_box(), self.central_box(), self.uu_box());
        for (i, b) in self.branches.iter().enumerate() {
            let ss_norm = operator_norm(&b.ss);
            let c_min = b.central.iter().map(|a| a.abs()).fold(f64::INFINITY, f64::min);
            let c_max = b.central.amax();
            if ss_norm >= 1.0 {
                return invalid(format!("branch {i}: ss block does not contract"));
            }
            if !(c_min > 0.0 && c_max < 1.0) {
                return invalid(format!("branch {i}: central rates must lie in (0, 1)"));
            }
            if min_singular_value(&b.uu) <= 1.0 {
                return invalid(format!("branch {i}: uu block does not expand"));
            }
            if ss_norm >= c_min {
                return invalid(format!("branch {i}: ss contraction does not dominate the central one"));
            }
            for j in 0..self.d_ss + self.d_cs {
                if (b.domain.lo[j] - self.reference.lo[j]).abs() > DOMAIN_TOL
                    || (b.domain.hi[j] - self.reference.hi[j]).abs() > DOMAIN_TOL
                {
                    return invalid(format!("branch {i}: domain must span U in the ss and central coordinates"));
                }
            }
            if !self.reference.contains_box(&b.domain) {
                return invalid(format!("branch {i}: domain is not inside U"));
            }
            let ss_off = b.offset.rows(0, self.d_ss).into_owned();
            if !ss_box
                .inflate(DOMAIN_TOL)
                .contains_box(&ss_box.linear_image(&b.ss, Some(&ss_off)))
            {
                return invalid(format!("branch {i}: ss image leaves U"));
            }
            let uu_off = b.offset.rows(self.d_ss + self.d_cs, self.d_uu).into_owned();
            let uu_inv = b
                .uu
                .clone()
                .try_inverse()
                .ok_or_else(|| BlenderError::InvalidSpec(format!("branch {i}: singular uu block")))?;
            let dom_uu = b.domain.slice(self.d_ss + self.d_cs, self.d_uu).inflate(DOMAIN_TOL);
            for corner in uu_box.corners() {
                if !dom_uu.contains((&uu_inv * (corner - &uu_off)).as_slice()) {
                    return invalid(format!("branch {i}: uu image does not cross U"));
                }
            }
        }
        let off = self.d_ss + self.d_cs;
        for i in 0..self.branches.len() {
            for j in i + 1..self.branches.len() {
                let a = self.branches[i].domain.slice(off, self.d_uu);
                let b = self.branches[j].domain.slice(off, self.d_uu);
                let overlap = (0..self.d_uu).all(|q| a.lo[q].max(b.lo[q]) < a.hi[q].min(b.hi[q]));
                if overlap {
                    return invalid(format!("domains of branches {i} and {j} overlap"));
                }
            }
        }
        if self.distinctive >= self.branches.len() {
            return invalid("distinctive branch index out of range");
        }
        let p = self.distinctive_saddle();
        let dom = &self.branches[self.distinctive].domain;
        let interior = |r: std::ops::Range<usize>| r.into_iter().all(|q| dom.lo[q] < p[q] && p[q] < dom.hi[q]);
        let central_ok = (self.d_ss..off).all(|q| c_box.lo[q - self.d_ss] <= p[q] && p[q] <= c_box.hi[q - self.d_ss]);
        if !(interior(0..self.d_ss) && interior(off..off + self.d_uu) && central_ok) {
            return invalid("distinctive saddle is not inside its branch domain");
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d_ss + self.d_cs + self.d_uu
    }

    pub fn ss_box(&self) -> BoxN {
        self.reference.slice(0, self.d_ss)
    }

    pub fn central_box(&self) -> BoxN {
        self.reference.slice(self.d_ss, self.d_cs)
    }

    pub fn uu_box(&self) -> BoxN {
        self.reference.slice(self.d_ss + self.d_cs, self.d_uu)
    }

    pub fn central_offset(&self, i: usize) -> DVector<f64> {
        self.branches[i].offset.rows(self.d_ss, self.d_cs).into_owned()
    }

    pub fn ss_offset(&self, i: usize) -> DVector<f64> {
        self.branches[i].offset.rows(0, self.d_ss).into_owned()
    }

    /// `g_i(x) = a_i x + b_i` on the central coordinates.
    pub fn central_map(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        self.branches[i].central.component_mul(x) + self.central_offset(i)
    }

    pub fn central_inverse(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        (x - self.central_offset(i)).component_div(&self.branches[i].central)
    }

    /// `g_i(C)` for the central reference box `C`.
    pub fn central_image(&self, i: usize) -> BoxN {
        let b = &self.branches[i];
        self.central_box()
            .linear_image(&DMatrix::from_diagonal(&b.central), Some(&self.central_offset(i)))
    }

    pub fn apply(&self, i: usize, p: &DVector<f64>) -> DVector<f64> {
        let b = &self.branches[i];
        b.linear() * p + &b.offset
    }

    pub fn apply_inverse(&self, i: usize, p: &DVector<f64>) -> DVector<f64> {
        let b = &self.branches[i];
        let inv = b.linear().try_inverse().expect("validated branches are invertible");
        inv * (p - &b.offset)
    }

    /// Fixed point of the distinctive branch.
    pub fn distinctive_saddle(&self) -> DVector<f64> {
        let b = &self.branches[self.distinctive];
        let n = self.dim();
        let m = DMatrix::identity(n, n) - b.linear();
        m.lu().solve(&b.offset).expect("hyperbolic branch has a unique fixed point")
    }

    /// Whether every central rate lies in `(1/2, 1)`.
    pub fn central_rates_in_half_one(&self) -> bool {
        self.branches
            .iter()
            .all(|b| b.central.iter().all(|a| a.abs() > 0.5 && a.abs() < 1.0))
    }

    /// Largest modulus of a central rate.
    pub fn max_central_rate(&self) -> f64 {
        self.branches.iter().map(|b| b.central.amax()).fold(0.0, f64::max)
    }

    /// Replaces the central reference box by the hull of the attractor of
    /// the central maps and stretches the branch domains accordingly.
    pub fn with_attractor_hull(&self) -> Blender {
        let mut hull = self.central_box();
        for _ in 0..10_000 {
            let mut next: Option<BoxN> = None;
            for i in 0..self.branches.len() {
                let b = &self.branches[i];
                let img = hull.linear_image(&DMatrix::from_diagonal(&b.central), Some(&self.central_offset(i)));
                next = Some(match next {
                    None => img,
                    Some(n) => BoxN::new(
                        n.lo.iter().zip(&img.lo).map(|(a, b)| a.min(*b)).collect(),
                        n.hi.iter().zip(&img.hi).map(|(a, b)| a.max(*b)).collect(),
                    ),
                });
            }
            let next = next.expect("at least one branch");
            let change = (0..self.d_cs)
                .map(|q| (next.lo[q] - hull.lo[q]).abs().max((next.hi[q] - hull.hi[q]).abs()))
                .fold(0.0, f64::max);
            hull = next;
            if change <= 1e-15 {
                break;
            }
        }
        let mut out = self.clone();
        for q in 0..self.d_cs {
            out.reference.lo[self.d_ss + q] = hull.lo[q];
            out.reference.hi[self.d_ss + q] = hull.hi[q];
            for b in out.branches.iter_mut() {
                b.domain.lo[self.d_ss + q] = hull.lo[q];
                b.domain.hi[self.d_ss + q] = hull.hi[q];
            }
        }
        out
    }
}
