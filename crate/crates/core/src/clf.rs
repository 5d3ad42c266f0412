//! Exponential ISS control Lyapunov functions and the min-norm adaptive
//! stabilizing controller.
//!
//! Given estimates `θ̂`, the controller solves
//!
//! ```text
//! min ½‖u‖²  s.t.  LfV + LFV·θ̂ + LgV·u ≤ −c3·V − ‖LFV‖²/ε_V
//! ```
//!
//! in closed form. The `‖LFV‖²/ε_V` term makes the closed loop ISS with
//! respect to the parameter estimation error.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dynamics::{check_len, ControlVec, ParamVec, ParametricAffineSystem, StateVec};
use crate::error::{ControlError, Result};
use crate::qp::{min_norm_halfspace, HalfspaceConstraint};

/// A scalar CLF candidate with its analytic gradient.
pub trait LyapunovCandidate: Send + Sync + fmt::Debug {
    fn value(&self, x: &StateVec) -> f64;
    /// `∇V(x)` as a column vector of length n.
    fn gradient(&self, x: &StateVec) -> DVector<f64>;
    /// `Some(P)` when `V(x) = ½xᵀPx`.
    fn quadratic_form(&self) -> Option<&DMatrix<f64>> {
        None
    }
}

/// `V(x) = ½ xᵀ P x` with symmetric positive definite `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLyapunov {
    p: DMatrix<f64>,
}

impl QuadraticLyapunov {
    pub fn new(p: DMatrix<f64>) -> Result<Self> {
        if !p.is_square() {
            return Err(ControlError::InvalidArgument("P must be square".into()));
        }
        if (&p - p.transpose()).amax() > 1e-12 * (1.0 + p.amax()) {
            return Err(ControlError::InvalidArgument("P must be symmetric".into()));
        }
        Ok(Self { p })
    }

    /// `½‖q‖² + ½‖q + q̇‖²` for `x = [q; q̇]`, `q ∈ R^k`, i.e.
    /// `P = [[2, 1], [1, 1]] ⊗ I_k`.
    pub fn position_velocity(k: usize) -> Self {
        let mut p = DMatrix::zeros(2 * k, 2 * k);
        for i in 0..k {
            p[(i, i)] = 2.0;
            p[(i, i + k)] = 1.0;
            p[(i + k, i)] = 1.0;
            p[(i + k, i + k)] = 1.0;
        }
        Self { p }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }
}

impl LyapunovCandidate for QuadraticLyapunov {
    fn value(&self, x: &StateVec) -> f64 {
        0.5 * x.dot(&(&self.p * x))
    }

    fn gradient(&self, x: &StateVec) -> DVector<f64> {
        &self.p * x
    }

    fn quadratic_form(&self) -> Option<&DMatrix<f64>> {
        Some(&self.p)
    }
}

/// Lie derivatives of V along the three parts of the vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct ClfLieData {
    /// `∇V·f(x)`
    pub lf: f64,
    /// `(∇V·F(x))ᵀ`, length p.
    pub lf_param: DVector<f64>,
    /// `(∇V·g(x))ᵀ`, length m.
    pub lg: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct EissClf {
    candidate: Arc<dyn LyapunovCandidate>,
    pub c3: f64,
    pub eps_v: f64,
}

impl EissClf {
    pub fn new(candidate: Arc<dyn LyapunovCandidate>, c3: f64, eps_v: f64) -> Result<Self> {
        if !(c3 > 0.0 && eps_v > 0.0) {
            return Err(ControlError::InvalidArgument(format!(
                "CLF constants must be positive (c3 = {c3}, eps_v = {eps_v})"
            )));
        }
        Ok(Self {
            candidate,
            c3,
            eps_v,
        })
    }

    /// The planar double-integrator CLF `½‖q‖² + ½‖q + q̇‖²`.
    pub fn double_integrator(c3: f64, eps_v: f64) -> Result<Self> {
        Self::new(Arc::new(QuadraticLyapunov::position_velocity(2)), c3, eps_v)
    }

    pub fn candidate(&self) -> &dyn LyapunovCandidate {
        self.candidate.as_ref()
    }

    pub fn value(&self, x: &StateVec) -> f64 {
        self.candidate.value(x)
    }

    pub fn gradient(&self, x: &StateVec) -> DVector<f64> {
        self.candidate.gradient(x)
    }

    pub fn lie(&self, sys: &dyn ParametricAffineSystem, x: &StateVec) -> Result<ClfLieData> {
        let grad = self.candidate.gradient(x);
        check_len("CLF gradient", sys.dims().state, grad.len())?;
        Ok(ClfLieData {
            lf: grad.dot(&sys.drift(x)?),
            lf_param: sys.regressor(x)?.tr_mul(&grad),
            lg: sys.actuation(x)?.tr_mul(&grad),
        })
    }

    /// The CLF decrease condition as `a·u ≤ b`.
    pub fn constraint(
        &self,
        sys: &dyn ParametricAffineSystem,
        x: &StateVec,
        theta_hat: &ParamVec,
    ) -> Result<HalfspaceConstraint> {
        check_len("parameter", sys.dims().params, theta_hat.len())?;
        let lie = self.lie(sys, x)?;
        let b = -self.c3 * self.value(x)
            - lie.lf_param.norm_squared() / self.eps_v
            - lie.lf
            - lie.lf_param.dot(theta_hat);
        Ok(HalfspaceConstraint::at_most(lie.lg, b))
    }

    /// Min-norm controller `k(x, θ̂)`.
    pub fn controller(
        &self,
        sys: &dyn ParametricAffineSystem,
        x: &StateVec,
        theta_hat: &ParamVec,
    ) -> Result<ControlVec> {
        let c = self.constraint(sys, x, theta_hat)?;
        min_norm_halfspace(&c).map_err(|e| match e {
            ControlError::InfeasibleConstraint { .. } => ControlError::ClfInfeasible {
                state: x.iter().copied().collect(),
            },
            other => other,
        })
    }

    /// `(c1, c2)` with `c1‖x‖² ≤ V(x) ≤ c2‖x‖²` for quadratic candidates.
    pub fn quadratic_bounds(&self) -> Result<(f64, f64)> {
        let p = self
            .candidate
            .quadratic_form()
            .ok_or(ControlError::Unsupported("quadratic bounds need a quadratic CLF"))?;
        let eig = SymmetricEigen::new(p.clone()).eigenvalues;
        Ok((eig.min() / 2.0, eig.max() / 2.0))
    }
}
