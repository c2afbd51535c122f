//! Horseshoes given by a subshift of finite type with locally constant
//! diagonal derivative: entropy, the Parry measure, Lyapunov exponents and
//! the entropy-gap inequalities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntropyError {
    #[error("transition matrix must be a nonempty square 0/1 matrix: {0}")]
    InvalidMatrix(String),
    #[error("transition matrix is reducible")]
    Reducible,
    #[error("transition matrix is irreducible but periodic")]
    Periodic,
    #[error("invalid rates: {0}")]
    InvalidRates(String),
    #[error("smoothness r = {0} must exceed 1")]
    InvalidSmoothness(f64),
    #[error("power iteration did not converge")]
    NoConvergence,
}

fn default_r() -> f64 {
    2.0
}

/// Spec file schema. For every state the first `m` rates are the stable
/// contractions and the last `n` the unstable expansions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeSpec {
    pub matrix: Vec<Vec<u8>>,
    pub rates: Vec<Vec<f64>>,
    pub m: usize,
    pub n: usize,
    #[serde(default = "default_r")]
    pub r: f64,
}

/// Stationary weights and transition probabilities of a Markov chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovMeasure {
    pub weights: Vec<f64>,
    pub transitions: Vec<Vec<f64>>,
}

impl MarkovMeasure {
    /// Entropy `-sum pi_i P_ij log P_ij` of the chain, in nats.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (pi, row) in self.weights.iter().zip(&self.transitions) {
            for &p in row {
                if p > 0.0 {
                    h -= pi * p * p.ln();
                }
            }
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Exponents in increasing order.
    pub exponents: Vec<f64>,
    pub chi_cs: f64,
    pub chi_cu: f64,
    pub j_s: f64,
    pub j_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyGapReport {
    pub h_top: f64,
    pub r: f64,
    pub spectrum: SpectrumReport,
    pub threshold_cs: f64,
    pub threshold_cu: f64,
    pub cs_ok: bool,
    pub cu_ok: bool,
    pub double_ok: bool,
}

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 1_000_000;

impl HorseshoeSpec {
    pub fn states(&self) -> usize {
        self.matrix.len()
    }

    fn matrix_f64(&self) -> DMatrix<f64> {
        let s = self.states();
        DMatrix::from_fn(s, s, |i, j| self.matrix[i][j] as f64)
    }

    pub fn validate(&self) -> Result<(), EntropyError> {
        let s = self.states();
        if s == 0 || self.matrix.iter().any(|r| r.len() != s) {
            return Err(EntropyError::InvalidMatrix("not square".into()));
        }
        if self.matrix.iter().flatten().any(|&a| a > 1) {
            return Err(EntropyError::InvalidMatrix("entries must be 0 or 1".into()));
        }
        if !(self.r > 1.0) {
            return Err(EntropyError::InvalidSmoothness(self.r));
        }
        if self.rates.len() != s {
            return Err(EntropyError::InvalidRates(format!("need rates for {s} states")));
        }
        if self.m == 0 || self.n == 0 {
            return Err(EntropyError::InvalidRates("m and n must be positive".into()));
        }
        for (i, r) in self.rates.iter().enumerate() {
            if r.len() != self.m + self.n {
                return Err(EntropyError::InvalidRates(format!(
                    "state {i} has {} rates, expected {}",
                    r.len(),
                    self.m + self.n
                )));
            }
            let stable_ok = r[..self.m].iter().all(|&x| x > 0.0 && x < 1.0);
            let unstable_ok = r[self.m..].iter().all(|&x| x > 1.0 && x.is_finite());
            if !stable_ok || !unstable_ok {
                return Err(EntropyError::InvalidRates(format!(
                    "state {i}: first {} rates must lie in (0, 1), last {} above 1",
                    self.m, self.n
                )));
            }
        }
        self.check_primitive()
    }

    fn check_primitive(&self) -> Result<(), EntropyError> {
        let s = self.states();
        let reach = |start: usize, forward: bool| {
            let mut seen = vec![false; s];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                for j in 0..s {
                    let edge = if forward { self.matrix[i][j] } else { self.matrix[j][i] };
                    if edge == 1 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|b| b)
        };
        if !reach(0, true) || !reach(0, false) {
            return Err(EntropyError::Reducible);
        }
        // Wielandt: a primitive matrix has A^k > 0 for k = (s-1)^2 + 1
        let a: Vec<Vec<bool>> = self
            .matrix
            .iter()
            .map(|r| r.iter().map(|&x| x == 1).collect())
            .collect();
        let mut p = a.clone();
        for _ in 1..(s - 1) * (s - 1) + 1 {
            p = (0..s)
                .map(|i| (0..s).map(|j| (0..s).any(|l| p[i][l] && a[l][j])).collect())
                .collect();
        }
        if p.iter().flatten().all(|&b| b) {
            Ok(())
        } else {
            Err(EntropyError::Periodic)
        }
    }

    /// Spec of the inverse horseshoe: inverted rates with the groups
    /// swapped and the transition graph reversed.
    pub fn inverse(&self) -> HorseshoeSpec {
        let s = self.states();
        HorseshoeSpec {
            matrix: (0..s).map(|i| (0..s).map(|j| self.matrix[j][i]).collect()).collect(),
            rates: self
                .rates
                .iter()
                .map(|r| r.iter().rev().map(|x| 1.0 / x).collect())
                .collect(),
            m: self.n,
            n: self.m,
            r: self.r,
        }
    }
}

/// Perron eigenvalue and positive eigenvector of a primitive matrix.
fn perron(a: &DMatrix<f64>) -> Result<(f64, DVector<f64>), EntropyError> {
    let s = a.nrows();
    let mut v = DVector::from_element(s, 1.0 / s as f64);
    let mut rho = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let w = a * &v;
        let next_rho = w.sum() / v.sum();
        let w = &w / w.sum();
        let change = (&w - &v).amax();
        v = w;
        let settled = (next_rho - rho).abs() <= POWER_TOL * next_rho;
        rho = next_rho;
        if settled && change <= POWER_TOL {
            return Ok((rho, v));
        }
    }
    Err(EntropyError::NoConvergence)
}

/// `log` of the spectral radius of the transition matrix.
pub fn topological_entropy(spec: &HorseshoeSpec) -> Result<f64, EntropyError> {
    spec.validate()?;
    Ok(perron(&spec.matrix_f64())?.0.ln())
}

/// Parry measure: `P_ij = A_ij v_j / (rho v_i)`, `pi_i ~ u_i v_i` with `u`,
/// `v` the left and right Perron vectors.
pub fn maximal_entropy_measure(spec: &HorseshoeSpec) -> Result<MarkovMeasure, EntropyError> {
    spec.validate()?;
    let a = spec.matrix_f64();
    let (rho, v) = perron(&a)?;
    let (_, u) = perron(&a.transpose())?;
    let s = spec.states();
    let w: Vec<f64> = (0..s).map(|i| u[i] * v[i]).collect();
    let total: f64 = w.iter().sum();
    Ok(MarkovMeasure {
        weights: w.iter().map(|x| x / total).collect(),
        transitions: (0..s)
            .map(|i| (0..s).map(|j| a[(i, j)] * v[j] / (rho * v[i])).collect())
            .collect(),
    })
}

/// Lyapunov exponents of a stationary measure (weights per state).
pub fn lyapunov_spectrum(spec: &HorseshoeSpec, measure: &MarkovMeasure) -> SpectrumReport {
    let dim = spec.m + spec.n;
    let avg: Vec<f64> = (0..dim)
        .map(|i| {
            measure
                .weights
                .iter()
                .zip(&spec.rates)
                .map(|(w, r)| w * r[i].ln())
                .sum()
        })
        .collect();
    let mut stable = avg[..spec.m].to_vec();
    let mut unstable = avg[spec.m..].to_vec();
    stable.sort_by(f64::total_cmp);
    unstable.sort_by(f64::total_cmp);
    let chi_cs = *stable.last().expect("m > 0");
    let chi_cu = unstable[0];
    let j_s = stable.iter().sum::<f64>().exp();
    let j_u = unstable.iter().sum::<f64>().exp();
    SpectrumReport {
        exponents: stable.into_iter().chain(unstable).collect(),
        chi_cs,
        chi_cu,
        j_s,
        j_u,
    }
}

/// Evaluates `h > -log J_s + chi_cs / 2r` (cs) and
/// `h > log J_u - chi_cu / 2r` (cu) for the measure of maximal entropy.
pub fn entropy_gap(spec: &HorseshoeSpec) -> Result<EntropyGapReport, EntropyError> {
    let h_top = topological_entropy(spec)?;
    let mu = maximal_entropy_measure(spec)?;
    let sp = lyapunov_spectrum(spec, &mu);
    let two_r = 2.0 * spec.r;
    let threshold_cs = -sp.j_s.ln() + sp.chi_cs / two_r;
    let threshold_cu = sp.j_u.ln() - sp.chi_cu / two_r;
    let cs_ok = h_top > threshold_cs;
    let cu_ok = h_top > threshold_cu;
    Ok(EntropyGapReport {
        h_top,
        r: spec.r,
        spectrum: sp,
        threshold_cs,
        threshold_cu,
        cs_ok,
        cu_ok,
        double_ok: cs_ok && cu_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_shift(k: usize, rates: &[f64], m: usize) -> HorseshoeSpec {
        HorseshoeSpec {
            matrix: vec![vec![1; k]; k],
            rates: vec![rates.to_vec(); k],
            m,
            n: rates.len() - m,
            r: 2.0,
        }
    }

    #[test]
    fn entropy_of_full_shifts() {
        let h2 = topological_entropy(&full_shift(2, &[0.5, 2.0], 1)).unwrap();
        assert!((h2 - 2f64.ln()).abs() < 1e-12);
        let h3 = topological_entropy(&full_shift(3, &[0.5, 2.0], 1)).unwrap();
        assert!((h3 - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn golden_mean_entropy_and_weights() {
        let spec = HorseshoeSpec {
            matrix: vec![vec![1, 1], vec![1, 0]],
            rates: vec![vec![0.5, 2.0]; 2],
            m: 1,
            n: 1,
            r: 2.0,
        };
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((topological_entropy(&spec).unwrap() - phi.ln()).abs() < 1e-12);
        let mu = maximal_entropy_measure(&spec).unwrap();
        let w0 = phi * phi / (1.0 + phi * phi);
        assert!((mu.weights[0] - w0).abs() < 1e-12);
        assert!((mu.weights[1] - (1.0 - w0)).abs() < 1e-12);
        assert!((mu.entropy() - phi.ln()).abs() < 1e-10);
    }

    #[test]
    fn uniform_measure_on_full_shift() {
        let mu = maximal_entropy_measure(&full_shift(4, &[0.5, 2.0], 1)).unwrap();
        for w in &mu.weights {
            assert!((w - 0.25).abs() < 1e-12);
        }
        for p in mu.transitions.iter().flatten() {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn reducible_and_periodic_matrices() {
        let mut spec = full_shift(2, &[0.5, 2.0], 1);
        spec.matrix = vec![vec![1, 1], vec![0, 1]];
        assert_eq!(topological_entropy(&spec), Err(EntropyError::Reducible));
        spec.matrix = vec![vec![0, 1], vec![1, 0]];
        assert_eq!(topological_entropy(&spec), Err(EntropyError::Periodic));
    }

    #[test]
    fn invalid_rates_are_rejected() {
        let spec = full_shift(2, &[0.5, 1.0], 1);
        assert!(matches!(spec.validate(), Err(EntropyError::InvalidRates(_))));
        let spec = full_shift(2, &[2.0, 0.5], 1);
        assert!(matches!(spec.validate(), Err(EntropyError::InvalidRates(_))));
    }

    #[test]
    fn constant_rate_exponents() {
        let spec = full_shift(2, &[0.8, 0.9, 4.0], 2);
        let sp = lyapunov_spectrum(&spec, &maximal_entropy_measure(&spec).unwrap());
        let expect = [0.8f64.ln(), 0.9f64.ln(), 4f64.ln()];
        for (a, b) in sp.exponents.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((sp.chi_cs - 0.9f64.ln()).abs() < 1e-15);
        assert!((sp.j_s - 0.72).abs() < 1e-15);
    }

    #[test]
    fn weighted_exponents_two_states() {
        let spec = HorseshoeSpec {
            matrix: vec![vec![1, 1]; 2],
            rates: vec![vec![0.5, 2.0], vec![0.25, 4.0]],
            m: 1,
            n: 1,
            r: 2.0,
        };
        let sp = lyapunov_spectrum(&spec, &maximal_entropy_measure(&spec).unwrap());
        let oracle = (0.5f64.ln() + 0.25f64.ln()) / 2.0;
        assert!((sp.exponents[0] - oracle).abs() < 1e-12);
        assert!((sp.exponents[1] + oracle).abs() < 1e-12);
        assert!((oracle + 1.03972).abs() < 1e-5);
    }

    #[test]
    fn entropy_gap_thresholds() {
        let r = entropy_gap(&full_shift(2, &[0.9, 0.8, 4.0], 2)).unwrap();
        let oracle = -(0.72f64.ln()) + 0.9f64.ln() / 4.0;
        assert!((r.threshold_cs - oracle).abs() < 1e-12);
        assert!((r.threshold_cs - 0.30216).abs() < 1e-5);
        assert!(r.cs_ok);
        let r = entropy_gap(&full_shift(2, &[0.25, 1.0 / 3.0, 4.0], 2)).unwrap();
        assert!((r.threshold_cs - 2.21026).abs() < 1e-5);
        assert!(!r.cs_ok);
        let r = entropy_gap(&full_shift(2, &[0.9, 0.8, 1.5], 2)).unwrap();
        assert!((r.threshold_cu - 0.30410).abs() < 1e-5);
        assert!(r.cu_ok);
        let r = entropy_gap(&full_shift(2, &[0.9, 0.8, 4.0], 2)).unwrap();
        assert!((r.threshold_cu - 1.03972).abs() < 1e-5);
        assert!(!r.cu_ok && !r.double_ok);
    }
}
