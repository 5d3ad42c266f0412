//! Input-to-state safe high order control barrier functions.
//!
//! A constraint `h` of relative degree `r` generates the chain
//! `ψ0 = h`, `ψi = ψ̇(i−1) + αi(ψ(i−1))`. The safety filter keeps
//!
//! ```text
//! Lfψ + LFψ·θ̂ + Lgψ·u ≥ −αr(ψ(r−1)) + ‖LFψ‖²/ε_h      (ψ = ψ(r−1))
//! ```
//!
//! which renders the inflated set `Cδ = {x : ψ(i−1)(x) + γi(δ) ≥ 0 ∀i}`
//! forward invariant whenever `‖θ̃‖∞ ≤ δ`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::dynamics::{check_len, ControlVec, ParamVec, ParametricAffineSystem, StateVec};
use crate::error::{ControlError, Result};
use crate::qp::{project_halfspace, HalfspaceConstraint};

/// Extended class-K∞ functions with explicit inverses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassKappa {
    /// `α(s) = λ s`, `λ > 0`.
    Linear(f64),
}

impl ClassKappa {
    pub fn linear(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(Self::Linear(lambda))
        } else {
            Err(ControlError::InvalidArgument(format!(
                "class-K∞ slope must be positive, got {lambda}"
            )))
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Self::Linear(l) => l * s,
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match *self {
            Self::Linear(l) => y / l,
        }
    }

    pub fn derivative(&self, _s: f64) -> f64 {
        match *self {
            Self::Linear(l) => l,
        }
    }
}

/// A ψ-chain supplied analytically.
pub trait BarrierChain: Send + Sync + fmt::Debug {
    fn relative_degree(&self) -> usize;
    /// `α1..αr`.
    fn alphas(&self) -> &[ClassKappa];
    /// `[ψ0(x), …, ψ(r−1)(x)]`.
    fn psi(&self, x: &StateVec) -> Vec<f64>;
    /// `∇ψi(x)` for `i < r`.
    fn psi_gradient(&self, level: usize, x: &StateVec) -> DVector<f64>;
}

/// Circular obstacle for a planar `[q; q̇]` state: `h = ‖q − q_o‖² − R_o² − margin`.
///
/// `h` has relative degree 2 with respect to both `u` and the drag
/// parameters, so it yields a two-level chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleChain {
    pub center: [f64; 2],
    pub radius: f64,
    pub margin: f64,
    alphas: [ClassKappa; 2],
}

impl ObstacleChain {
    pub fn new(
        center: [f64; 2],
        radius: f64,
        margin: f64,
        alpha1: ClassKappa,
        alpha2: ClassKappa,
    ) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(ControlError::InvalidArgument(format!(
                "obstacle radius must be positive, got {radius}"
            )));
        }
        if !(margin >= 0.0) {
            return Err(ControlError::InvalidArgument(format!(
                "safety margin must be non-negative, got {margin}"
            )));
        }
        Ok(Self {
            center,
            radius,
            margin,
            alphas: [alpha1, alpha2],
        })
    }

    fn offset(&self, x: &StateVec) -> [f64; 2] {
        [x[0] - self.center[0], x[1] - self.center[1]]
    }

    pub fn h(&self, x: &StateVec) -> f64 {
        let [d1, d2] = self.offset(x);
        d1 * d1 + d2 * d2 - self.radius * self.radius - self.margin
    }
}

impl BarrierChain for ObstacleChain {
    fn relative_degree(&self) -> usize {
        2
    }

    fn alphas(&self) -> &[ClassKappa] {
        &self.alphas
    }

    fn psi(&self, x: &StateVec) -> Vec<f64> {
        let [d1, d2] = self.offset(x);
        let h = self.h(x);
        let h_dot = 2.0 * (d1 * x[2] + d2 * x[3]);
        vec![h, h_dot + self.alphas[0].eval(h)]
    }

    fn psi_gradient(&self, level: usize, x: &StateVec) -> DVector<f64> {
        let [d1, d2] = self.offset(x);
        match level {
            0 => DVector::from_column_slice(&[2.0 * d1, 2.0 * d2, 0.0, 0.0]),
            1 => {
                let k = self.alphas[0].derivative(self.h(x));
                DVector::from_column_slice(&[
                    2.0 * x[2] + 2.0 * k * d1,
                    2.0 * x[3] + 2.0 * k * d2,
                    2.0 * d1,
                    2.0 * d2,
                ])
            }
            _ => panic!("level {level} out of range for a relative-degree-2 chain"),
        }
    }
}

/// `[γ1(δ), …, γr(δ)]` from `γr = −αr⁻¹(−εδ²/4)`, `γi = −αi⁻¹(−γ(i+1))`.
pub fn gamma_recursion(alphas: &[ClassKappa], eps_h: f64, delta: f64) -> Result<Vec<f64>> {
    if !(delta >= 0.0) {
        return Err(ControlError::InvalidArgument(format!(
            "disturbance level must be non-negative, got {delta}"
        )));
    }
    let mut out = vec![0.0; alphas.len()];
    let mut next = eps_h * delta * delta / 4.0;
    for (slot, alpha) in out.iter_mut().zip(alphas).rev() {
        *slot = -alpha.inverse(-next);
        next = *slot;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CbfLieData {
    pub lf: f64,
    pub lf_param: DVector<f64>,
    pub lg: DVector<f64>,
}

/// Result of testing `x ∈ Cδ`.
#[derive(Debug, Clone, PartialEq)]
pub struct InflatedMembership {
    pub member: bool,
    /// `ρi(x, δ) = ψ(i−1)(x) + γi(δ)` for `i = 1..r`.
    pub margins: Vec<f64>,
}

/// An ISSf-HOCBF: a ψ-chain plus the robustness constant `ε_h`.
#[derive(Debug, Clone)]
pub struct HocbfChain {
    chain: Arc<dyn BarrierChain>,
    pub eps_h: f64,
}

impl HocbfChain {
    pub fn new(chain: Arc<dyn BarrierChain>, eps_h: f64) -> Result<Self> {
        if !(eps_h > 0.0) {
            return Err(ControlError::InvalidArgument(format!(
                "eps_h must be positive, got {eps_h}"
            )));
        }
        if chain.alphas().len() != chain.relative_degree() {
            return Err(ControlError::InvalidArgument(
                "chain needs one class-K∞ function per level".into(),
            ));
        }
        Ok(Self { chain, eps_h })
    }

    pub fn chain(&self) -> &dyn BarrierChain {
        self.chain.as_ref()
    }

    pub fn relative_degree(&self) -> usize {
        self.chain.relative_degree()
    }

    pub fn psi(&self, x: &StateVec) -> Vec<f64> {
        self.chain.psi(x)
    }

    pub fn gammas(&self, delta: f64) -> Result<Vec<f64>> {
        gamma_recursion(self.chain.alphas(), self.eps_h, delta)
    }

    pub fn inflated_membership(&self, x: &StateVec, delta: f64) -> Result<InflatedMembership> {
        let gammas = self.gammas(delta)?;
        let margins: Vec<f64> = self
            .psi(x)
            .iter()
            .zip(&gammas)
            .map(|(psi, gamma)| psi + gamma)
            .collect();
        Ok(InflatedMembership {
            member: margins.iter().all(|m| *m >= 0.0),
            margins,
        })
    }

    /// Lie derivatives of `ψ(r−1)`.
    pub fn lie(&self, sys: &dyn ParametricAffineSystem, x: &StateVec) -> Result<CbfLieData> {
        let grad = self.chain.psi_gradient(self.relative_degree() - 1, x);
        check_len("barrier gradient", sys.dims().state, grad.len())?;
        Ok(CbfLieData {
            lf: grad.dot(&sys.drift(x)?),
            lf_param: sys.regressor(x)?.tr_mul(&grad),
            lg: sys.actuation(x)?.tr_mul(&grad),
        })
    }

    /// The ISSf-HOCBF condition as `a·u ≥ b`.
    pub fn constraint(
        &self,
        sys: &dyn ParametricAffineSystem,
        x: &StateVec,
        theta_hat: &ParamVec,
    ) -> Result<HalfspaceConstraint> {
        check_len("parameter", sys.dims().params, theta_hat.len())?;
        let r = self.relative_degree();
        let top = self.psi(x)[r - 1];
        let alpha_r = self.chain.alphas()[r - 1];
        let lie = self.lie(sys, x)?;
        let b = -alpha_r.eval(top) + lie.lf_param.norm_squared() / self.eps_h
            - lie.lf
            - lie.lf_param.dot(theta_hat);
        Ok(HalfspaceConstraint::at_least(lie.lg, b))
    }

    /// Minimally modify `u_ref` so that the barrier condition holds.
    pub fn safety_filter(
        &self,
        sys: &dyn ParametricAffineSystem,
        x: &StateVec,
        theta_hat: &ParamVec,
        u_ref: &ControlVec,
    ) -> Result<ControlVec> {
        let c = self.constraint(sys, x, theta_hat)?;
        project_halfspace(u_ref, &c).map_err(|e| match e {
            ControlError::InfeasibleConstraint { .. } => ControlError::CbfInfeasible {
                state: x.iter().copied().collect(),
            },
            other => other,
        })
    }
}
