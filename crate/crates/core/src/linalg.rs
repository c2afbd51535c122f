//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

/// Eigenvalues of a square matrix (real Schur form for sizes above 2).
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    match m.nrows() {
        0 => Vec::new(),
        1 => vec![Complex64::new(m[(0, 0)], 0.0)],
        2 => {
            let (a, b) = eigen2(&Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]));
            vec![a, b]
        }
        _ => m.complex_eigenvalues().iter().cloned().collect(),
    }
}

/// Closed-form eigenvalues of a 2x2 real matrix, larger real part first.
pub fn eigen2(m: &Matrix2<f64>) -> (Complex64, Complex64) {
    let tr = m.trace();
    let det = m.determinant();
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // avoid cancellation in the smaller root
        let q = if tr >= 0.0 { 0.5 * (tr + s) } else { 0.5 * (tr - s) };
        let other = if q != 0.0 { det / q } else { 0.0 };
        let (hi, lo) = if q >= other { (q, other) } else { (other, q) };
        (Complex64::new(hi, 0.0), Complex64::new(lo, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im))
    }
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest singular value (spectral norm). Zero for empty matrices.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Smallest singular value. Infinite for empty matrices.
pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    m.clone().singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn rotation(phi: f64) -> Matrix2<f64> {
    let (s, c) = phi.sin_cos();
    Matrix2::new(c, -s, s, c)
}

pub fn rotation_dyn(phi: f64) -> DMatrix<f64> {
    let r = rotation(phi);
    DMatrix::from_row_slice(2, 2, &[r[(0, 0)], r[(0, 1)], r[(1, 0)], r[(1, 1)]])
}

pub fn mat_pow(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            out = &out * &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    out
}

pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}

pub fn is_diagonal(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

/// Matrix from row-major nested vectors. `cols` fixes the width of a
/// matrix with zero rows.
pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<DMatrix<f64>, String> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(0, cols));
    }
    let c = rows[0].len();
    if rows.iter().any(|r| r.len() != c) {
        return Err("ragged matrix rows".into());
    }
    Ok(DMatrix::from_fn(rows.len(), c, |i, j| rows[i][j]))
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
