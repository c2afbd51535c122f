//! Higher-order terms of the transition map.

use std::fmt::Debug;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::Dims;

/// Higher-order terms added to the four equations of the transition map.
///
/// The input is `z = (u, x, h, v_bar)` with `h = y - y_minus`; the output is
/// stacked as `(r_u, r_x, r_y, r_v)` with the same block sizes. `r_v` enters
/// the implicit equation for `v_bar`.
pub trait Remainder: Debug + Send + Sync {
    fn eval(&self, z: &DVector<f64>) -> DVector<f64>;

    /// Bound on the sup norm of the output on the ball `|z|_inf <= radius`.
    fn sup_bound(&self, radius: f64) -> f64;

    /// Lipschitz constant (sup norm) on the ball `|z|_inf <= radius`.
    fn lipschitz(&self, radius: f64) -> f64;
}

/// Named remainder presets accepted in model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum RemainderSpec {
    /// `coeff * h_0^3` added to the first component of `y_bar`.
    Cubic { coeff: f64 },
    /// `coeff * v_bar_0^2` added to the first `v` equation; makes the
    /// `v_bar` equation genuinely implicit.
    VbarCoupling { coeff: f64 },
}

impl RemainderSpec {
    pub fn build(&self, dims: Dims) -> Result<Box<dyn Remainder>, String> {
        match *self {
            RemainderSpec::Cubic { coeff } => Ok(Box::new(Cubic { dims, coeff })),
            RemainderSpec::VbarCoupling { coeff } => {
                if dims.dv() == 0 {
                    return Err("vbar_coupling needs n > n_u".into());
                }
                Ok(Box::new(VbarCoupling { dims, coeff }))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cubic {
    pub dims: Dims,
    pub coeff: f64,
}

impl Remainder for Cubic {
    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut r = DVector::zeros(self.dims.total());
        let iy = self.dims.y().start;
        r[iy] = self.coeff * z[iy].powi(3);
        r
    }

    fn sup_bound(&self, radius: f64) -> f64 {
        self.coeff.abs() * radius.powi(3)
    }

    fn lipschitz(&self, radius: f64) -> f64 {
        3.0 * self.coeff.abs() * radius * radius
    }
}

#[derive(Debug, Clone)]
pub struct VbarCoupling {
    pub dims: Dims,
    pub coeff: f64,
}

impl Remainder for VbarCoupling {
    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut r = DVector::zeros(self.dims.total());
        let iv = self.dims.v().start;
        r[iv] = self.coeff * z[iv] * z[iv];
        r
    }

    fn sup_bound(&self, radius: f64) -> f64 {
        self.coeff.abs() * radius * radius
    }

    fn lipschitz(&self, radius: f64) -> f64 {
        2.0 * self.coeff.abs() * radius
    }
}
