//! Closed-form solutions of the single-halfspace QPs used by the
//! stabilizing controller and the safety filter.
//!
//! Both problems have exactly one affine constraint, so the minimizer is
//! either the unconstrained optimum or its Euclidean projection onto the
//! constraint boundary.

use nalgebra::DVector;

use crate::dynamics::ControlVec;
use crate::error::{ControlError, Result};

/// `‖a‖` below this is treated as zero.
pub const ZERO_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `a·u ≤ b`
    AtMost,
    /// `a·u ≥ b`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceConstraint {
    pub a: DVector<f64>,
    pub b: f64,
    pub sense: Sense,
}

impl HalfspaceConstraint {
    pub fn at_most(a: DVector<f64>, b: f64) -> Self {
        Self {
            a,
            b,
            sense: Sense::AtMost,
        }
    }

    pub fn at_least(a: DVector<f64>, b: f64) -> Self {
        Self {
            a,
            b,
            sense: Sense::AtLeast,
        }
    }

    /// Signed slack: non-negative iff `u` satisfies the constraint.
    pub fn slack(&self, u: &DVector<f64>) -> f64 {
        let au = self.a.dot(u);
        match self.sense {
            Sense::AtMost => self.b - au,
            Sense::AtLeast => au - self.b,
        }
    }

    pub fn is_satisfied(&self, u: &DVector<f64>, tol: f64) -> bool {
        self.slack(u) >= -tol
    }

    /// The same set written as `a·u ≥ b`.
    fn as_at_least(&self) -> (DVector<f64>, f64) {
        match self.sense {
            Sense::AtLeast => (self.a.clone(), self.b),
            Sense::AtMost => (-&self.a, -self.b),
        }
    }
}

/// Project `u_ref` onto `{u : a·u ≥ b}` (either sense is accepted).
fn project(u_ref: &ControlVec, c: &HalfspaceConstraint) -> Result<ControlVec> {
    let (a, b) = c.as_at_least();
    if a.len() != u_ref.len() {
        return Err(ControlError::DimensionMismatch {
            what: "constraint normal",
            expected: u_ref.len(),
            got: a.len(),
        });
    }
    let a_sq = a.norm_squared();
    let gap = b - a.dot(u_ref);
    if a_sq.sqrt() < ZERO_NORM_TOL {
        return if gap > 0.0 {
            Err(ControlError::InfeasibleConstraint { b: c.b })
        } else {
            Ok(u_ref.clone())
        };
    }
    if gap <= 0.0 {
        Ok(u_ref.clone())
    } else {
        Ok(u_ref + a * (gap / a_sq))
    }
}

/// `argmin ½‖u‖²` subject to the constraint.
pub fn min_norm_halfspace(c: &HalfspaceConstraint) -> Result<ControlVec> {
    project(&DVector::zeros(c.a.len()), c)
}

/// `argmin ½‖u − u_ref‖²` subject to the constraint.
pub fn project_halfspace(u_ref: &ControlVec, c: &HalfspaceConstraint) -> Result<ControlVec> {
    project(u_ref, c)
}
