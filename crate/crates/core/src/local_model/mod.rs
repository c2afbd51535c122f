//! Local model of a homoclinic tangency.
//!
//! Coordinates near the saddle are `(u, x, y, v)` with sizes
//! `(m - m_s, m_s, n_u, n - n_u)`: strong stable, leading stable, leading
//! unstable, strong unstable. The local map `T0` is linear and block
//! diagonal; the transition map `T1` goes from a box `Pi-` around the
//! tangency point `Y-` on the local unstable manifold to a box `Pi+` around
//! `Y+` on the local stable manifold.

pub mod experiments;
pub mod generic;
pub mod remainder;
pub mod strip;

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoxN;
use crate::linalg::{block_diag, eigenvalues, from_rows, mat_pow};
use crate::spectra::{classify, SaddleClassification, SpectraError};

pub use remainder::{Remainder, RemainderSpec};
pub use strip::{Face, Strip};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("iterate {0} left the neighbourhood W")]
    LeftNeighborhood(usize),
    #[error("point is outside the reference box Pi-")]
    OutsideReferenceBox,
    #[error("implicit solve for v_bar did not converge, last step {0}")]
    ImplicitSolveFailure(f64),
    #[error("strip for k = {0} is empty")]
    EmptyStrip(usize),
    #[error("point lies outside the strip for k = {0}")]
    OutsideStrip(usize),
    #[error("tangent frame at angle {angle} leaves the cone of half-angle {half_angle}")]
    ConeViolation { angle: f64, half_angle: f64 },
    #[error("degenerate disk: {0}")]
    DegenerateDisk(String),
    #[error("operation needs n = 1 but the model has n = {0}")]
    WrongCodimension(usize),
    #[error("quantifier violated: 10 K delta / rho = {0} is not below 1")]
    QuantifierViolation(f64),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// Block sizes of the local coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
    pub m_s: usize,
    pub n_u: usize,
}

impl Dims {
    pub fn du(&self) -> usize {
        self.m - self.m_s
    }

    pub fn dv(&self) -> usize {
        self.n - self.n_u
    }

    pub fn total(&self) -> usize {
        self.m + self.n
    }

    pub fn u(&self) -> Range<usize> {
        0..self.du()
    }

    pub fn x(&self) -> Range<usize> {
        self.du()..self.m
    }

    pub fn y(&self) -> Range<usize> {
        self.m..self.m + self.n_u
    }

    pub fn v(&self) -> Range<usize> {
        self.m + self.n_u..self.total()
    }

    /// The center-unstable coordinates `(x, y, v)`.
    pub fn central(&self) -> Range<usize> {
        self.du()..self.total()
    }

    /// Size of each block in the order `(u, x, y, v)`.
    pub fn blocks(&self) -> [usize; 4] {
        [self.du(), self.m_s, self.n_u, self.dv()]
    }

    /// `u1.., x1.., y1.., v1..` in coordinate order.
    pub fn coordinate_names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.total());
        for (name, size) in ["u", "x", "y", "v"].iter().zip(self.blocks()) {
            out.extend((1..=size).map(|i| format!("{name}{i}")));
        }
        out
    }

    pub fn block(&self, i: usize) -> Range<usize> {
        match i {
            0 => self.u(),
            1 => self.x(),
            2 => self.y(),
            _ => self.v(),
        }
    }
}

/// Names of the linear transition blocks; `C3` is quadratic and separate.
pub const BLOCK_NAMES: [[&str; 4]; 4] = [
    ["A1", "B1", "C1", "D1"],
    ["A2", "B2", "C2", "D2"],
    ["A3", "B3", "C3", "D3"],
    ["A4", "B4", "C4", "D4"],
];

/// Transition map file schema. Missing blocks are zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionSpec {
    /// One `n_u x n_u` quadratic form per component of `y_bar`.
    #[serde(rename = "C3", default)]
    pub c3: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remainder: Option<RemainderSpec>,
    #[serde(flatten)]
    pub blocks: BTreeMap<String, Vec<Vec<f64>>>,
}

/// Model file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub m: usize,
    pub n: usize,
    pub m_s: usize,
    pub n_u: usize,
    #[serde(rename = "A", default)]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D", default)]
    pub d: Vec<Vec<f64>>,
    #[serde(rename = "W")]
    pub w: BoxN,
    pub y_minus: Vec<f64>,
    pub y_plus: Vec<f64>,
    pub pi_minus: BoxN,
    pub pi_plus: BoxN,
    #[serde(default)]
    pub ell: usize,
    pub transition: TransitionSpec,
    #[serde(default = "default_cone_half_angle")]
    pub cone_half_angle: f64,
}

fn default_cone_half_angle() -> f64 {
    0.3
}

/// The transition map `T1` in cross form.
///
/// `lin[i][j]` is the coefficient of input block `j` (`u`, `x`, `h`,
/// `v_bar`) in equation `i` (`u_bar`, `x_bar`, `y_bar`, `v`); `lin[2][2]` is
/// unused because `h` enters `y_bar` quadratically through `quad`.
#[derive(Debug, Clone)]
pub struct TransitionMap {
    pub lin: [[DMatrix<f64>; 4]; 4],
    pub quad: Vec<DMatrix<f64>>,
    pub remainder: Option<Arc<dyn Remainder>>,
    /// Translation of the first component of `y_bar` (unfolding parameter).
    pub t: f64,
}

impl TransitionMap {
    pub fn block(&self, name: &str) -> &DMatrix<f64> {
        for (i, row) in BLOCK_NAMES.iter().enumerate() {
            if let Some(j) = row.iter().position(|b| *b == name) {
                return &self.lin[i][j];
            }
        }
        panic!("unknown block {name}")
    }
}

/// Constants frozen at construction and used by the expansion estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Volume constant: min central determinant over `Pi-` times the
    /// cone distortion `cos(theta)^(m_s + n)`.
    pub l: f64,
    /// Diameter constant `1.05 |C2| + |A2| + |B2|`.
    pub k: f64,
    pub min_central_det: f64,
}

#[derive(Debug, Clone)]
pub struct LocalTangencyModel {
    pub dims: Dims,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub w: BoxN,
    pub y_minus: DVector<f64>,
    pub y_plus: DVector<f64>,
    pub pi_minus: BoxN,
    pub pi_plus: BoxN,
    pub ell: usize,
    pub transition: TransitionMap,
    pub cone_half_angle: f64,
    pub calibration: Calibration,
    pub lambda: f64,
    pub gamma: f64,
}

const IMPLICIT_MAX_ITER: usize = 100;
const IMPLICIT_TOL: f64 = 1e-12;
const FD_STEP: f64 = 1e-6;

fn moduli(m: &DMatrix<f64>) -> Vec<f64> {
    eigenvalues(m).iter().map(|z| z.norm()).collect()
}

fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::InvalidModel(msg.into())
}

fn matrix(rows: &[Vec<f64>], r: usize, c: usize, name: &str) -> Result<DMatrix<f64>, ModelError> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(r, c));
    }
    let m = from_rows(rows, c).map_err(|e| invalid(format!("{name}: {e}")))?;
    if m.shape() != (r, c) {
        return Err(invalid(format!(
            "{name} has shape {:?}, expected ({r}, {c})",
            m.shape()
        )));
    }
    Ok(m)
}

impl LocalTangencyModel {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self, ModelError> {
        let dims = Dims {
            m: spec.m,
            n: spec.n,
            m_s: spec.m_s,
            n_u: spec.n_u,
        };
        if dims.m_s == 0 || dims.n_u == 0 || dims.m_s > dims.m || dims.n_u > dims.n {
            return Err(invalid("need 1 <= m_s <= m and 1 <= n_u <= n"));
        }
        let [du, ms, nu, dv] = dims.blocks();
        let a = matrix(&spec.a, du, du, "A")?;
        let b = matrix(&spec.b, ms, ms, "B")?;
        let c = matrix(&spec.c, nu, nu, "C")?;
        let d = matrix(&spec.d, dv, dv, "D")?;

        let sizes = dims.blocks();
        let mut unknown: Vec<&String> = spec
            .transition
            .blocks
            .keys()
            .filter(|k| !BLOCK_NAMES.iter().flatten().any(|b| b == k) || *k == "C3")
            .collect();
        if let Some(k) = unknown.pop() {
            return Err(invalid(format!("unknown transition block {k}")));
        }
        let lin: [[DMatrix<f64>; 4]; 4] = std::array::from_fn(|i| {
            std::array::from_fn(|j| DMatrix::zeros(sizes[i], sizes[j]))
        });
        let mut lin = lin;
        for (i, row) in BLOCK_NAMES.iter().enumerate() {
            for (j, name) in row.iter().enumerate() {
                if let Some(rows) = spec.transition.blocks.get(*name) {
                    lin[i][j] = matrix(rows, sizes[i], sizes[j], name)?;
                }
            }
        }
        let quad = if spec.transition.c3.is_empty() {
            vec![DMatrix::zeros(nu, nu); nu]
        } else {
            if spec.transition.c3.len() != nu {
                return Err(invalid(format!("C3 needs {nu} quadratic forms")));
            }
            spec.transition
                .c3
                .iter()
                .map(|q| matrix(q, nu, nu, "C3"))
                .collect::<Result<Vec<_>, _>>()?
        };
        let remainder = match &spec.transition.remainder {
            Some(r) => Some(Arc::from(r.build(dims).map_err(invalid)?)),
            None => None,
        };
        let transition = TransitionMap {
            lin,
            quad,
            remainder,
            t: 0.0,
        };
        Self::new(
            dims,
            [a, b, c, d],
            spec.w.clone(),
            DVector::from_vec(spec.y_minus.clone()),
            DVector::from_vec(spec.y_plus.clone()),
            spec.pi_minus.clone(),
            spec.pi_plus.clone(),
            spec.ell,
            transition,
            spec.cone_half_angle,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dims: Dims,
        [a, b, c, d]: [DMatrix<f64>; 4],
        w: BoxN,
        y_minus: DVector<f64>,
        y_plus: DVector<f64>,
        pi_minus: BoxN,
        pi_plus: BoxN,
        ell: usize,
        transition: TransitionMap,
        cone_half_angle: f64,
    ) -> Result<Self, ModelError> {
        let total = dims.total();
        for (name, bx) in [("W", &w), ("pi_minus", &pi_minus), ("pi_plus", &pi_plus)] {
            if bx.dim() != total || bx.is_empty() {
                return Err(invalid(format!("{name} must be a nonempty box of dimension {total}")));
            }
        }
        if y_minus.len() != total || y_plus.len() != total {
            return Err(invalid(format!("tangency points must have dimension {total}")));
        }
        if !(cone_half_angle > 0.0 && cone_half_angle < std::f64::consts::FRAC_PI_2) {
            return Err(invalid("cone half-angle must lie in (0, pi/2)"));
        }
        let (ma, mb, mc, md) = (moduli(&a), moduli(&b), moduli(&c), moduli(&d));
        let lambda = mb.iter().cloned().fold(0.0, f64::max);
        let gamma = mc.iter().cloned().fold(f64::INFINITY, f64::min);
        let same = |v: &[f64], r: f64| v.iter().all(|x| (x - r).abs() <= 1e-9 * r);
        if !(lambda < 1.0) || !same(&mb, lambda) {
            return Err(invalid("B must have all eigenvalue moduli equal to lambda < 1"));
        }
        if !(gamma > 1.0) || !same(&mc, gamma) {
            return Err(invalid("C must have all eigenvalue moduli equal to gamma > 1"));
        }
        if ma.iter().any(|&r| !(r < lambda)) || ma.iter().any(|&r| r == 0.0) {
            return Err(invalid("A must be invertible with eigenvalue moduli below lambda"));
        }
        if md.iter().any(|&r| !(r > gamma)) {
            return Err(invalid("D must have eigenvalue moduli above gamma"));
        }
        let on_unstable = dims.u().chain(dims.x()).all(|i| y_minus[i] == 0.0);
        let on_stable = dims.y().chain(dims.v()).all(|i| y_plus[i] == 0.0);
        if !on_unstable || !on_stable {
            return Err(invalid(
                "Y_minus must have u = x = 0 and Y_plus must have y = v = 0",
            ));
        }
        if !pi_minus.contains(y_minus.as_slice()) || !pi_plus.contains(y_plus.as_slice()) {
            return Err(invalid("reference boxes must contain the tangency points"));
        }
        if !w.contains_box(&pi_minus) || !w.contains_box(&pi_plus) {
            return Err(invalid("reference boxes must lie in W"));
        }
        let mut model = Self {
            dims,
            a,
            b,
            c,
            d,
            w,
            y_minus,
            y_plus,
            pi_minus,
            pi_plus,
            ell,
            transition,
            cone_half_angle,
            calibration: Calibration {
                l: 0.0,
                k: 0.0,
                min_central_det: 0.0,
            },
            lambda,
            gamma,
        };
        model.calibration = model.calibrate();
        Ok(model)
    }

    fn calibrate(&self) -> Calibration {
        let samples = 9;
        let d = self.dims.total();
        let mut min_det = f64::INFINITY;
        let mut idx = vec![0usize; d];
        loop {
            let s: Vec<f64> = idx.iter().map(|&i| i as f64 / (samples - 1) as f64).collect();
            let p = self.pi_minus.at_unit(&s);
            if let Ok(j) = self.t1_jacobian(&p) {
                min_det = min_det.min(self.central_block(&j).determinant().abs());
            }
            let mut carry = 0;
            while carry < d {
                idx[carry] += 1;
                if idx[carry] < samples {
                    break;
                }
                idx[carry] = 0;
                carry += 1;
            }
            if carry == d {
                break;
            }
        }
        let dc = self.dims.central().len() as i32;
        let norm = crate::linalg::operator_norm;
        let t = &self.transition;
        Calibration {
            l: min_det * self.cone_half_angle.cos().powi(dc),
            k: 1.05 * norm(t.block("C2")) + norm(t.block("A2")) + norm(t.block("B2")),
            min_central_det: min_det,
        }
    }

    /// The center-unstable block of a full Jacobian.
    pub fn central_block(&self, j: &DMatrix<f64>) -> DMatrix<f64> {
        let r = self.dims.central();
        j.view((r.start, r.start), (r.len(), r.len())).into_owned()
    }

    pub fn spec_dims(&self) -> Dims {
        self.dims
    }

    /// Matrix of `T0`.
    pub fn linear_part(&self) -> DMatrix<f64> {
        block_diag(&[&self.a, &self.b, &self.c, &self.d])
    }

    pub fn multipliers(&self) -> Vec<Complex64> {
        eigenvalues(&self.linear_part())
    }

    pub fn classification(&self) -> Result<SaddleClassification, SpectraError> {
        classify(&self.multipliers(), self.dims.n)
    }

    /// Leading Jacobian `lambda^m_s gamma^n_u`.
    pub fn leading_jacobian(&self) -> f64 {
        self.lambda.powi(self.dims.m_s as i32) * self.gamma.powi(self.dims.n_u as i32)
    }

    /// `T0^k(p)`, failing if an iterate leaves `W`.
    pub fn apply_t0(&self, p: &DVector<f64>, k: usize) -> Result<DVector<f64>, ModelError> {
        let l = self.linear_part();
        let mut q = p.clone();
        for i in 0..k {
            if !self.w.contains(q.as_slice()) {
                return Err(ModelError::LeftNeighborhood(i));
            }
            q = &l * q;
        }
        if !self.w.contains(q.as_slice()) {
            return Err(ModelError::LeftNeighborhood(k));
        }
        Ok(q)
    }

    /// `T0^k(p)` without neighbourhood checks.
    pub fn t0_raw(&self, p: &DVector<f64>, k: usize) -> DVector<f64> {
        mat_pow(&self.linear_part(), k) * p
    }

    /// Splits `p` into `(u, x, h, v - v_minus)`.
    fn deviations(&self, p: &DVector<f64>) -> [DVector<f64>; 4] {
        std::array::from_fn(|i| {
            let r = self.dims.block(i);
            let mut z = p.rows(r.start, r.len()).into_owned();
            if i >= 2 {
                z -= self.y_minus.rows(r.start, r.len());
            }
            z
        })
    }

    fn solve_vbar(&self, dev: &[DVector<f64>; 4]) -> Result<DVector<f64>, ModelError> {
        let dims = self.dims;
        let dv = dims.dv();
        if dv == 0 {
            return Ok(DVector::zeros(0));
        }
        let lin = &self.transition.lin;
        let rhs = &dev[3] - &lin[3][0] * &dev[0] - &lin[3][1] * &dev[1] - &lin[3][2] * &dev[2];
        let lu = lin[3][3].clone().lu();
        let mut vbar = lu
            .solve(&rhs)
            .ok_or(ModelError::ImplicitSolveFailure(f64::INFINITY))?;
        let Some(rem) = &self.transition.remainder else {
            return Ok(vbar);
        };
        let mut step = f64::INFINITY;
        for _ in 0..IMPLICIT_MAX_ITER {
            let z = self.stack(dev, &vbar);
            let r4 = rem.eval(&z).rows(dims.v().start, dv).into_owned();
            let next = lu
                .solve(&(&rhs - r4))
                .ok_or(ModelError::ImplicitSolveFailure(f64::INFINITY))?;
            step = (&next - &vbar).amax();
            vbar = next;
            if step < IMPLICIT_TOL {
                return Ok(vbar);
            }
        }
        Err(ModelError::ImplicitSolveFailure(step))
    }

    fn stack(&self, dev: &[DVector<f64>; 4], vbar: &DVector<f64>) -> DVector<f64> {
        let mut z = DVector::zeros(self.dims.total());
        for (i, part) in [&dev[0], &dev[1], &dev[2], vbar].into_iter().enumerate() {
            let r = self.dims.block(i);
            z.rows_mut(r.start, r.len()).copy_from(part);
        }
        z
    }

    /// `T1(p)` without the `Pi-` check.
    pub fn t1_raw(&self, p: &DVector<f64>) -> Result<DVector<f64>, ModelError> {
        let dims = self.dims;
        let dev = self.deviations(p);
        let vbar = self.solve_vbar(&dev)?;
        let lin = &self.transition.lin;
        let h = &dev[2];
        let mut out = DVector::zeros(dims.total());
        for i in 0..3 {
            let mut val = &lin[i][0] * &dev[0] + &lin[i][1] * &dev[1] + &lin[i][3] * &vbar;
            if i == 2 {
                for (c, q) in self.transition.quad.iter().enumerate() {
                    val[c] += h.dot(&(q * h));
                }
                if dims.n_u > 0 {
                    val[0] += self.transition.t;
                }
            } else {
                val += &lin[i][2] * h;
            }
            let r = dims.block(i);
            val += self.y_plus.rows(r.start, r.len());
            out.rows_mut(r.start, r.len()).copy_from(&val);
        }
        let rv = dims.v();
        out.rows_mut(rv.start, rv.len()).copy_from(&vbar);
        if let Some(rem) = &self.transition.remainder {
            let r = rem.eval(&self.stack(&dev, &vbar));
            for i in 0..3 {
                let b = dims.block(i);
                let add = r.rows(b.start, b.len()).into_owned();
                let mut seg = out.rows_mut(b.start, b.len());
                seg += add;
            }
        }
        Ok(out)
    }

    /// `T1(p)` for `p` in `Pi-`.
    pub fn apply_t1(&self, p: &DVector<f64>) -> Result<DVector<f64>, ModelError> {
        if !self.pi_minus.contains_with_tol(p.as_slice(), 1e-12) {
            return Err(ModelError::OutsideReferenceBox);
        }
        self.t1_raw(p)
    }

    /// Derivative of `T1` at `p`: closed form for the polynomial part,
    /// central differences when a remainder is present.
    pub fn t1_jacobian(&self, p: &DVector<f64>) -> Result<DMatrix<f64>, ModelError> {
        let dims = self.dims;
        let total = dims.total();
        if self.transition.remainder.is_some() {
            let mut j = DMatrix::zeros(total, total);
            for c in 0..total {
                let mut hi = p.clone();
                let mut lo = p.clone();
                hi[c] += FD_STEP;
                lo[c] -= FD_STEP;
                let col = (self.t1_raw(&hi)? - self.t1_raw(&lo)?) / (2.0 * FD_STEP);
                j.set_column(c, &col);
            }
            return Ok(j);
        }
        let lin = &self.transition.lin;
        let dv = dims.dv();
        // d v_bar / d(u, x, y, v)
        let mut dvbar = DMatrix::zeros(dv, total);
        if dv > 0 {
            let mut rhs = DMatrix::zeros(dv, total);
            for (j, blk) in [&lin[3][0], &lin[3][1], &lin[3][2]].into_iter().enumerate() {
                let r = dims.block(j);
                rhs.view_mut((0, r.start), (dv, r.len())).copy_from(&(-blk));
            }
            let rv = dims.v();
            rhs.view_mut((0, rv.start), (dv, dv)).fill_with_identity();
            dvbar = lin[3][3]
                .clone()
                .lu()
                .solve(&rhs)
                .ok_or(ModelError::ImplicitSolveFailure(f64::INFINITY))?;
        }
        let h = &self.deviations(p)[2];
        let mut j = DMatrix::zeros(total, total);
        for i in 0..3 {
            let ri = dims.block(i);
            let mut rows = &lin[i][3] * &dvbar;
            for (c, blk) in lin[i].iter().take(3).enumerate() {
                let rc = dims.block(c);
                if i == 2 && c == 2 {
                    for (q_idx, q) in self.transition.quad.iter().enumerate() {
                        let g = (q + q.transpose()) * h;
                        for col in 0..rc.len() {
                            rows[(q_idx, rc.start + col)] += g[col];
                        }
                    }
                } else {
                    let mut v = rows.view_mut((0, rc.start), (ri.len(), rc.len()));
                    v += blk;
                }
            }
            j.view_mut((ri.start, 0), (ri.len(), total)).copy_from(&rows);
        }
        let rv = dims.v();
        j.view_mut((rv.start, 0), (dv, total)).copy_from(&dvbar);
        Ok(j)
    }

    /// Return map `R_k = T1 o T0^k` on `Pi_k+`.
    pub fn return_map(&self, k: usize, p: &DVector<f64>) -> Result<DVector<f64>, ModelError> {
        let s = self.strip(k)?;
        if !s.box_plus.contains_with_tol(p.as_slice(), 1e-12) {
            return Err(ModelError::OutsideStrip(k));
        }
        let q = self.apply_t0(p, k)?;
        self.t1_raw(&q)
    }

    /// `T1(T0^k(p))` with no domain checks.
    pub fn return_map_raw(&self, k: usize, p: &DVector<f64>) -> Result<DVector<f64>, ModelError> {
        self.t1_raw(&self.t0_raw(p, k))
    }

    /// Derivative of the return map by the chain rule.
    pub fn return_jacobian(&self, k: usize, p: &DVector<f64>) -> Result<DMatrix<f64>, ModelError> {
        let lk = mat_pow(&self.linear_part(), k);
        let q = &lk * p;
        Ok(self.t1_jacobian(&q)? * lk)
    }

    /// Sup bound of the remainder over `Pi-`, used to inflate image boxes.
    pub fn remainder_bound(&self) -> f64 {
        match &self.transition.remainder {
            None => 0.0,
            Some(r) => {
                let radius = self
                    .pi_minus
                    .corners()
                    .iter()
                    .map(|c| {
                        let dev = self.deviations(c);
                        dev.iter().map(|d| d.amax()).fold(0.0, f64::max)
                    })
                    .fold(0.0, f64::max);
                r.sup_bound(radius)
            }
        }
    }
}
