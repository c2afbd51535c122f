//! Numeric checks of the genericity conditions at a tangency.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::LocalTangencyModel;
use crate::linalg::min_singular_value;

const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericReport {
    pub conditions: Vec<ConditionResult>,
    pub all_passed: bool,
}

impl GenericReport {
    pub fn get(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn result(name: &str, passed: bool, value: f64, detail: impl Into<String>) -> ConditionResult {
    ConditionResult {
        name: name.into(),
        passed,
        value,
        detail: detail.into(),
    }
}

fn numeric_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > DEGENERACY_TOL * smax.max(1.0)).count()
}

impl LocalTangencyModel {
    /// Report on conditions C0 to C5 and on the placement of the reference
    /// boxes. Nothing here is an error: a failing condition is a report
    /// entry.
    pub fn check_generic_conditions(&self) -> GenericReport {
        let dims = self.dims;
        let total = dims.total();
        let mut out = vec![result(
            "C0",
            true,
            0.0,
            "linearisability is an input guarantee of the model",
        )];
        let j = match self.t1_jacobian(&self.y_minus) {
            Ok(j) => j,
            Err(e) => {
                out.push(result("T1", false, f64::NAN, e.to_string()));
                return GenericReport {
                    conditions: out,
                    all_passed: false,
                };
            }
        };

        // C1: dim(T W^s(P) at Y+ cap DT1 T W^u(P) at Y-) = 1
        let mut combined = DMatrix::zeros(total, total);
        for i in 0..dims.m {
            combined[(i, i)] = 1.0;
        }
        let eu = dims.m..total;
        combined
            .view_mut((0, dims.m), (total, dims.n))
            .copy_from(&j.view((0, eu.start), (total, dims.n)));
        let defect = total - numeric_rank(&combined);
        out.push(result(
            "C1",
            defect == 1,
            defect as f64,
            format!("intersection defect dimension {defect}"),
        ));

        // C2: the tangency direction E_Y = DT1 e_y is not strong stable,
        // i.e. it has a nonzero leading stable component
        let ex = j.view((dims.x().start, dims.y().start), (dims.m_s, dims.n_u));
        let c2 = ex.norm();
        out.push(result(
            "C2",
            c2 > DEGENERACY_TOL,
            c2,
            "norm of the leading stable component of E_Y",
        ));

        // C3: quadratic contact
        let nu = dims.n_u;
        let mut q = DMatrix::zeros(nu, nu * nu);
        for (c, form) in self.transition.quad.iter().enumerate() {
            for r in 0..nu {
                for s in 0..nu {
                    q[(c, r * nu + s)] = 0.5 * (form[(r, s)] + form[(s, r)]);
                }
            }
        }
        let c3 = q.clone().singular_values().iter().cloned().fold(0.0, f64::max);
        let c3_min = if nu == 1 { c3 } else { min_singular_value(&q) };
        out.push(result(
            "C3",
            c3_min > DEGENERACY_TOL,
            c3_min,
            "smallest singular value of the quadratic coefficient",
        ));

        // C4: transversality of the center-unstable block of DT1 at Y-.
        // The quadratic term has zero derivative there, so this needs both
        // B3 and C2 nonzero.
        let det = self.central_block(&j).determinant();
        out.push(result(
            "C4",
            det.abs() > DEGENERACY_TOL,
            det,
            "determinant of d(x_bar, y_bar, v_bar)/d(x, y, v) at Y-",
        ));

        // C5: only relevant with strong unstable directions
        let dv = dims.dv();
        if dv == 0 {
            out.push(result("C5", true, f64::INFINITY, "vacuous for n = n_u"));
        } else {
            let s = min_singular_value(&self.transition.lin[3][3]);
            out.push(result(
                "C5",
                s > DEGENERACY_TOL,
                s,
                "smallest singular value of D4",
            ));
        }

        // reference boxes: f(Pi+) cap Pi+ and f^-1(Pi-) cap Pi- empty
        let l = self.linear_part();
        let fwd = self.pi_plus.linear_image(&l, None);
        out.push(result(
            "box_plus_disjoint",
            !fwd.intersects(&self.pi_plus),
            0.0,
            "T0(Pi+) is disjoint from Pi+ (bounding-box certificate)",
        ));
        let back = match l.clone().try_inverse() {
            Some(inv) => self.pi_minus.linear_image(&inv, None),
            None => self.pi_minus.clone(),
        };
        out.push(result(
            "box_minus_disjoint",
            !back.intersects(&self.pi_minus),
            0.0,
            "T0^-1(Pi-) is disjoint from Pi- (bounding-box certificate)",
        ));
        let all_passed = out.iter().all(|c| c.passed);
        GenericReport {
            conditions: out,
            all_passed,
        }
    }
}
