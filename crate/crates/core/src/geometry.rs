//! Closed intervals and axis-aligned boxes.
//!
//! Boxes are the only region type used by the local models and the affine
//! blenders: strips, reference boxes, branch domains and central reference
//! boxes are all products of closed intervals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A closed interval `[lo, hi]`. Empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi)
    }

    pub fn width(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.width()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.is_empty() || (self.lo <= other.lo && other.hi <= self.hi)
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    /// Image under `x -> a x`.
    pub fn scale(&self, a: f64) -> Interval {
        let (p, q) = (a * self.lo, a * self.hi);
        Interval::new(p.min(q), p.max(q))
    }

    pub fn shift(&self, b: f64) -> Interval {
        Interval::new(self.lo + b, self.hi + b)
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval::new(self.lo + other.lo, self.hi + other.hi)
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let c = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }

    /// Exact range of `x^2` over the interval.
    pub fn square(&self) -> Interval {
        if self.lo >= 0.0 {
            Interval::new(self.lo * self.lo, self.hi * self.hi)
        } else if self.hi <= 0.0 {
            Interval::new(self.hi * self.hi, self.lo * self.lo)
        } else {
            Interval::new(0.0, (self.lo * self.lo).max(self.hi * self.hi))
        }
    }

    pub fn inflate(&self, r: f64) -> Interval {
        Interval::new(self.lo - r, self.hi + r)
    }

    /// Largest absolute value attained on the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
}

/// Axis-aligned box, serialized as `{"lo": [...], "hi": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxN {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxN {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box bounds must have equal length");
        Self { lo, hi }
    }

    pub fn from_intervals(iv: &[Interval]) -> Self {
        Self {
            lo: iv.iter().map(|i| i.lo).collect(),
            hi: iv.iter().map(|i| i.hi).collect(),
        }
    }

    /// Box centred at `c` with half-widths `r`.
    pub fn centered(c: &[f64], r: &[f64]) -> Self {
        Self {
            lo: c.iter().zip(r).map(|(c, r)| c - r).collect(),
            hi: c.iter().zip(r).map(|(c, r)| c + r).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn interval(&self, i: usize) -> Interval {
        Interval::new(self.lo[i], self.hi[i])
    }

    pub fn intervals(&self) -> Vec<Interval> {
        (0..self.dim()).map(|i| self.interval(i)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals().iter().any(Interval::is_empty)
    }

    pub fn center(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.intervals().iter().map(Interval::mid))
    }

    pub fn half_widths(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.intervals().iter().map(Interval::radius))
    }

    pub fn widths(&self) -> Vec<f64> {
        self.intervals().iter().map(Interval::width).collect()
    }

    /// Euclidean length of the main diagonal.
    pub fn diameter(&self) -> f64 {
        self.widths().iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn volume(&self) -> f64 {
        self.widths().iter().product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && (0..self.dim()).all(|i| self.lo[i] <= p[i] && p[i] <= self.hi[i])
    }

    /// Containment with an absolute slack `tol` on every face.
    pub fn contains_with_tol(&self, p: &[f64], tol: f64) -> bool {
        p.len() == self.dim()
            && (0..self.dim()).all(|i| self.lo[i] - tol <= p[i] && p[i] <= self.hi[i] + tol)
    }

    pub fn contains_box(&self, other: &BoxN) -> bool {
        other.is_empty()
            || (0..self.dim()).all(|i| self.interval(i).contains_interval(&other.interval(i)))
    }

    pub fn intersect(&self, other: &BoxN) -> BoxN {
        BoxN::from_intervals(
            &(0..self.dim())
                .map(|i| self.interval(i).intersect(&other.interval(i)))
                .collect::<Vec<_>>(),
        )
    }

    pub fn intersects(&self, other: &BoxN) -> bool {
        !self.intersect(other).is_empty()
    }

    pub fn inflate(&self, r: f64) -> BoxN {
        BoxN::from_intervals(&self.intervals().iter().map(|i| i.inflate(r)).collect::<Vec<_>>())
    }

    /// Sub-box on the coordinate range `start..start+len`.
    pub fn slice(&self, start: usize, len: usize) -> BoxN {
        BoxN::new(
            self.lo[start..start + len].to_vec(),
            self.hi[start..start + len].to_vec(),
        )
    }

    /// Point at unit-cube coordinates `s` in `[0,1]^d`.
    pub fn at_unit(&self, s: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|i| self.lo[i] + s[i] * (self.hi[i] - self.lo[i])),
        )
    }

    /// The `2^d` vertices of the box.
    pub fn corners(&self) -> Vec<DVector<f64>> {
        let d = self.dim();
        (0..(1usize << d))
            .map(|mask| {
                DVector::from_iterator(
                    d,
                    (0..d).map(|i| if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] }),
                )
            })
            .collect()
    }

    /// Tight bounding box of the image of this box under `p -> m p + b`.
    pub fn linear_image(&self, m: &DMatrix<f64>, b: Option<&DVector<f64>>) -> BoxN {
        let c = m * self.center();
        let r = m.abs() * self.half_widths();
        let c = match b {
            Some(b) => c + b,
            None => c,
        };
        BoxN::centered(c.as_slice(), r.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_straddling_zero_starts_at_zero() {
        let s = Interval::new(-2.0, 1.0).square();
        assert_eq!(s, Interval::new(0.0, 4.0));
        assert_eq!(Interval::new(-3.0, -1.0).square(), Interval::new(1.0, 9.0));
    }

    #[test]
    fn empty_interval_has_zero_width() {
        let i = Interval::new(1.0, 0.0);
        assert!(i.is_empty());
        assert_eq!(i.width(), 0.0);
        assert!(Interval::new(0.0, 2.0).contains_interval(&i));
    }

    #[test]
    fn linear_image_of_rotated_square_is_its_bounding_box() {
        let b = BoxN::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let th = std::f64::consts::FRAC_PI_4;
        let m = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let img = b.linear_image(&m, None);
        let s = 2f64.sqrt();
        assert!((img.hi[0] - s).abs() < 1e-15 && (img.lo[1] + s).abs() < 1e-15);
        for c in b.corners() {
            assert!(img.contains_with_tol((&m * c).as_slice(), 1e-15));
        }
    }

    #[test]
    fn corners_enumerate_all_vertices() {
        let b = BoxN::new(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 3.0]);
        let cs = b.corners();
        assert_eq!(cs.len(), 8);
        assert!(cs.iter().any(|c| c.as_slice() == [1.0, 2.0, 3.0]));
    }
}
