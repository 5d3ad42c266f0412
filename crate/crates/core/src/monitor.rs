//! Post-hoc certificate checks over recorded trajectories.

use crate::cbf::HocbfChain;
use crate::error::Result;
use crate::sim::Trajectory;

/// Tolerance on inflated-set margins absorbing integration error.
pub const ISSF_TOL: f64 = 1e-4;

/// Inflated-set invariance at the realized disturbance level.
#[derive(Debug, Clone, PartialEq)]
pub struct IssfReport {
    /// `δ̂ = sup_t ‖θ̃(t)‖`
    pub delta: f64,
    pub gammas: Vec<f64>,
    /// `min_{t,i} ρi(x(t), δ̂)`
    pub min_margin: f64,
    /// Records with some `ρi < −tol`.
    pub violations: usize,
}

impl IssfReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Check `ρi(x(t), δ̂) ≥ −tol` along the trajectory with `δ̂` measured from it.
pub fn issf_report(traj: &Trajectory, barrier: &HocbfChain, tol: f64) -> Result<IssfReport> {
    let delta = traj.max_ttil();
    let gammas = barrier.gammas(delta)?;
    let mut min_margin = f64::INFINITY;
    let mut violations = 0;
    for rec in &traj.records {
        let worst = rec
            .psi
            .iter()
            .zip(&gammas)
            .map(|(psi, g)| psi + g)
            .fold(f64::INFINITY, f64::min);
        min_margin = min_margin.min(worst);
        if worst < -tol {
            violations += 1;
        }
    }
    Ok(IssfReport {
        delta,
        gammas,
        min_margin,
        violations,
    })
}

/// Discrete check of `V̇ ≤ −c3·V + (ε_V/4)‖θ̃‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClfDecreaseReport {
    /// Largest `V̇_fd − bound` over all steps.
    pub max_excess: f64,
    pub violations: usize,
}

/// Forward differences of V against the bound averaged over each step's
/// endpoints (the trapezoid pairing of the one-step difference).
pub fn clf_decrease_report(traj: &Trajectory, c3: f64, eps_v: f64, tol: f64) -> ClfDecreaseReport {
    let bound = |v: f64, ttil: f64| -c3 * v + 0.25 * eps_v * ttil * ttil;
    let mut max_excess = f64::NEG_INFINITY;
    let mut violations = 0;
    for w in traj.records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let vdot = (b.v - a.v) / (b.t - a.t);
        let allowed = 0.5 * (bound(a.v, a.ttil_norm) + bound(b.v, b.ttil_norm));
        let excess = vdot - allowed;
        max_excess = max_excess.max(excess);
        if excess > tol {
            violations += 1;
        }
    }
    ClfDecreaseReport {
        max_excess,
        violations,
    }
}
