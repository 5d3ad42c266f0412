//! Deterministic closed-loop simulation of the augmented system `(x, θ̂, Γ)`.
//!
//! Each step: evaluate the CLF controller, pass it through the safety
//! filter, record `(t, x, u)` in the integration window and offer the new
//! regressor pair to the history stack, then advance one RK4 step with the
//! input held and the stack frozen.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::cbf::{ClassKappa, HocbfChain, ObstacleChain};
use crate::clf::EissClf;
use crate::dynamics::{ControlVec, ParamVec, ParametricAffineSystem, StateVec, SystemRegistry};
use crate::error::{ControlError, Result};
use crate::estimation::{estimation_error_norm, EstimatorSettings, EstimatorState, GainLaw, GainParams};

/// One classical Runge–Kutta step of `ṡ = deriv(t, s)`.
pub fn rk4_step<F>(mut deriv: F, s: &DVector<f64>, t: f64, dt: f64) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let mut eval = |t: f64, s: &DVector<f64>| -> Result<DVector<f64>> {
        let d = deriv(t, s)?;
        if d.iter().all(|v| v.is_finite()) {
            Ok(d)
        } else {
            Err(ControlError::NonFinite { what: "derivative" })
        }
    };
    let half = 0.5 * dt;
    let k1 = eval(t, s)?;
    let k2 = eval(t + half, &(s + &k1 * half))?;
    let k3 = eval(t + half, &(s + &k2 * half))?;
    let k4 = eval(t + dt, &(s + &k3 * dt))?;
    Ok(s + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClfSettings {
    pub c3: f64,
    pub eps_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbfSettings {
    /// When false the barrier is still evaluated for monitoring but the
    /// reference control is applied unfiltered.
    pub enabled: bool,
    pub eps_h: f64,
    pub alpha1_lambda: f64,
    pub alpha2_lambda: f64,
    pub obstacle_center: [f64; 2],
    pub obstacle_radius: f64,
    pub margin: f64,
}

/// Axis-aligned boxes for initial-condition sampling; `lo == hi` pins a
/// coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingBoxes {
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub theta_hat_lo: Vec<f64>,
    pub theta_hat_hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub laws: Vec<GainLaw>,
    pub theta_hat0: Vec<Vec<f64>>,
}

/// Everything needed to reproduce an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub system: String,
    /// Ground-truth parameters.
    pub theta: Vec<f64>,
    pub dt: f64,
    pub horizon: f64,
    pub estimator: EstimatorSettings,
    /// When false `θ̂` and `Γ` are held at their initial values.
    pub adapt: bool,
    pub clf: ClfSettings,
    pub cbf: CbfSettings,
    pub x0: Vec<f64>,
    pub theta_hat0: Vec<f64>,
    pub sampling: SamplingBoxes,
    pub seed: u64,
    pub runs: usize,
    pub laws: Vec<GainLaw>,
    pub sweep: SweepSettings,
}

impl Default for SimConfig {
    /// The planar obstacle-avoidance experiment.
    fn default() -> Self {
        Self {
            system: crate::dynamics::DoubleIntegratorDrag::NAME.to_owned(),
            theta: vec![0.8, 1.4],
            dt: 1e-3,
            horizon: 20.0,
            estimator: EstimatorSettings {
                law: GainLaw::RlsForget,
                capacity: 20,
                gamma0: 100.0,
                params: GainParams {
                    beta: 1.0,
                    gamma_bar: 1000.0,
                },
                window_dt: 0.1,
            },
            adapt: true,
            clf: ClfSettings { c3: 1.0, eps_v: 20.0 },
            cbf: CbfSettings {
                enabled: true,
                eps_h: 1.0,
                alpha1_lambda: 1.0,
                alpha2_lambda: 0.5,
                obstacle_center: [-1.0, 1.0],
                obstacle_radius: 0.5,
                margin: 0.0,
            },
            x0: vec![-2.0, 2.0, 0.0, 0.0],
            theta_hat0: vec![0.0, 0.0],
            sampling: SamplingBoxes {
                x_lo: vec![-2.2, 1.8, 0.0, 0.0],
                x_hi: vec![-1.8, 2.2, 0.0, 0.0],
                theta_hat_lo: vec![0.0, 0.0],
                theta_hat_hi: vec![3.0, 3.0],
            },
            seed: 0,
            runs: 25,
            laws: GainLaw::ALL.to_vec(),
            sweep: SweepSettings {
                laws: vec![GainLaw::Gd, GainLaw::RlsForget],
                theta_hat0: vec![
                    vec![0.8, 1.4],
                    vec![1.5, 2.0],
                    vec![2.0, 2.5],
                    vec![3.0, 3.0],
                ],
            },
        }
    }
}

fn invalid(msg: String) -> ControlError {
    ControlError::InvalidArgument(msg)
}

impl SimConfig {
    pub fn with_law(&self, law: GainLaw) -> Self {
        let mut out = self.clone();
        out.estimator.law = law;
        out
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let (dt, window, horizon) = (self.dt, self.estimator.window_dt, self.horizon);
        if !(dt > 0.0 && dt < window && window < horizon) {
            return Err(invalid(format!(
                "need 0 < dt < window_dt < horizon (got {dt}, {window}, {horizon})"
            )));
        }
        self.estimator.validate()?;
        let s = &self.sampling;
        if s.x_lo.len() != s.x_hi.len() || s.theta_hat_lo.len() != s.theta_hat_hi.len() {
            return Err(invalid("sampling box bounds differ in length".into()));
        }
        for (lo, hi) in s.x_lo.iter().zip(&s.x_hi).chain(s.theta_hat_lo.iter().zip(&s.theta_hat_hi)) {
            if !(lo <= hi) {
                return Err(invalid(format!("sampling box has lo {lo} > hi {hi}")));
            }
        }
        if self.runs == 0 {
            return Err(invalid("run count must be >= 1".into()));
        }
        let all = self
            .theta
            .iter()
            .chain(&self.x0)
            .chain(&self.theta_hat0)
            .chain(s.x_lo.iter().chain(&s.x_hi))
            .chain(s.theta_hat_lo.iter().chain(&s.theta_hat_hi));
        if !all.into_iter().all(|v| v.is_finite()) {
            return Err(invalid("non-finite entry in config vectors".into()));
        }
        Ok(())
    }

    pub fn run_settings(&self) -> RunSettings {
        RunSettings {
            dt: self.dt,
            horizon: self.horizon,
            estimator: self.estimator,
            adapt: self.adapt,
        }
    }
}

/// Numerical and learning settings for a single run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub dt: f64,
    pub horizon: f64,
    pub estimator: EstimatorSettings,
    pub adapt: bool,
}

/// Plant, certificates and ground truth for a closed-loop run.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub system: Arc<dyn ParametricAffineSystem>,
    pub clf: EissClf,
    pub barrier: Option<HocbfChain>,
    /// Apply the safety filter (the barrier may be present for monitoring only).
    pub filter: bool,
    pub theta: ParamVec,
}

impl ClosedLoop {
    /// The CLF and obstacle barrier are built for planar `[q; q̇]` models.
    pub fn from_config(config: &SimConfig, registry: &SystemRegistry) -> Result<Self> {
        let system = registry.get(&config.system)?;
        let d = system.dims();
        if d.state != 4 || d.control != 2 {
            return Err(ControlError::Unsupported(
                "config-built controllers need a planar [q; q̇] model with 2 inputs",
            ));
        }
        if config.theta.len() != d.params {
            return Err(ControlError::DimensionMismatch {
                what: "true parameters",
                expected: d.params,
                got: config.theta.len(),
            });
        }
        let clf = EissClf::double_integrator(config.clf.c3, config.clf.eps_v)?;
        let cbf = &config.cbf;
        let chain = ObstacleChain::new(
            cbf.obstacle_center,
            cbf.obstacle_radius,
            cbf.margin,
            ClassKappa::linear(cbf.alpha1_lambda)?,
            ClassKappa::linear(cbf.alpha2_lambda)?,
        )?;
        Ok(Self {
            system,
            clf,
            barrier: Some(HocbfChain::new(Arc::new(chain), cbf.eps_h)?),
            filter: cbf.enabled,
            theta: DVector::from_column_slice(&config.theta),
        })
    }

    /// `(u_ref, u)` at the given state and estimate.
    pub fn control(&self, x: &StateVec, theta_hat: &ParamVec) -> Result<(ControlVec, ControlVec)> {
        let sys = self.system.as_ref();
        let u_ref = self.clf.controller(sys, x, theta_hat)?;
        let u = match (&self.barrier, self.filter) {
            (Some(b), true) => b.safety_filter(sys, x, theta_hat, &u_ref)?,
            _ => u_ref.clone(),
        };
        Ok((u_ref, u))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub x: StateVec,
    pub u_ref: ControlVec,
    pub u: ControlVec,
    pub theta_hat: ParamVec,
    pub ttil_norm: f64,
    pub v: f64,
    /// `[ψ0, …, ψ(r−1)]`; empty without a barrier.
    pub psi: Vec<f64>,
    pub stack_size: usize,
    pub sigma_min: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectoryRecord> {
        self.records.last()
    }

    pub fn final_state_norm(&self) -> f64 {
        self.last().map_or(f64::NAN, |r| r.x.norm())
    }

    /// `sup_t ‖θ̃(t)‖`.
    pub fn max_ttil(&self) -> f64 {
        self.records.iter().map(|r| r.ttil_norm).fold(0.0, f64::max)
    }

    pub fn min_psi(&self, level: usize) -> f64 {
        self.records
            .iter()
            .filter_map(|r| r.psi.get(level).copied())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_psi0(&self) -> f64 {
        self.min_psi(0)
    }
}

/// A run that stopped early; carries the records produced so far.
#[derive(Debug, Clone, Error)]
#[error("simulation aborted at step {step} (t = {time}): {cause}")]
pub struct SimAbort {
    pub step: usize,
    pub time: f64,
    pub cause: ControlError,
    pub partial: Trajectory,
}

fn pack(x: &StateVec, theta_hat: &ParamVec, gamma: &DMatrix<f64>) -> DVector<f64> {
    let (n, p) = (x.len(), theta_hat.len());
    let mut s = DVector::zeros(n + p + p * p);
    s.rows_mut(0, n).copy_from(x);
    s.rows_mut(n, p).copy_from(theta_hat);
    s.rows_mut(n + p, p * p).copy_from_slice(gamma.as_slice());
    s
}

fn unpack(s: &DVector<f64>, n: usize, p: usize) -> (StateVec, ParamVec, DMatrix<f64>) {
    (
        s.rows(0, n).into_owned(),
        s.rows(n, p).into_owned(),
        DMatrix::from_column_slice(p, p, s.rows(n + p, p * p).as_slice()),
    )
}

/// Simulate the closed loop from `(x0, θ̂0)` over `[0, horizon]`.
pub fn simulate_closed_loop(
    plant: &ClosedLoop,
    settings: &RunSettings,
    x0: &StateVec,
    theta_hat0: &ParamVec,
) -> std::result::Result<Trajectory, SimAbort> {
    let sys = plant.system.as_ref();
    let dims = sys.dims();
    let (n, p) = (dims.state, dims.params);
    let steps = (settings.horizon / settings.dt).round() as usize;
    let dt = settings.dt;
    let mut traj = Trajectory {
        dt,
        records: Vec::with_capacity(steps + 1),
    };

    let abort = |step: usize, cause: ControlError, traj: Trajectory| SimAbort {
        step,
        time: step as f64 * dt,
        cause,
        partial: traj,
    };

    let setup = || -> Result<EstimatorState> {
        crate::dynamics::check_len("initial state", n, x0.len())?;
        crate::dynamics::check_len("initial estimate", p, theta_hat0.len())?;
        crate::dynamics::check_len("true parameters", p, plant.theta.len())?;
        EstimatorState::new(&settings.estimator, theta_hat0.clone(), dt)
    };
    let mut est = match setup() {
        Ok(e) => e,
        Err(e) => return Err(abort(0, e, traj)),
    };

    let mut x = x0.clone();
    for k in 0..=steps {
        let t = k as f64 * dt;
        let step = (|| -> Result<ControlVec> {
            if !x.iter().all(|v| v.is_finite()) {
                return Err(ControlError::NonFinite { what: "state" });
            }
            let (u_ref, u) = plant.control(&x, &est.theta_hat)?;
            if settings.adapt {
                est.record(sys, t, &x, &u)?;
            }
            traj.records.push(TrajectoryRecord {
                t,
                x: x.clone(),
                u_ref,
                u: u.clone(),
                theta_hat: est.theta_hat.clone(),
                ttil_norm: estimation_error_norm(&est.theta_hat, &plant.theta),
                v: plant.clf.value(&x),
                psi: plant.barrier.as_ref().map(|b| b.psi(&x)).unwrap_or_default(),
                stack_size: est.stack.len(),
                sigma_min: est.stack.sigma_min(),
            });
            Ok(u)
        })();
        let u = match step {
            Ok(u) => u,
            Err(e) => return Err(abort(k, e, traj)),
        };
        if k == steps {
            break;
        }

        let s = pack(&x, &est.theta_hat, &est.gamma);
        let est_ref = &est;
        let adapt = settings.adapt;
        let next = rk4_step(
            |_t, s| {
                let (xs, th, g) = unpack(s, n, p);
                let xdot = sys.true_dynamics(&xs, &u, &plant.theta)?;
                let mut out = DVector::zeros(s.len());
                out.rows_mut(0, n).copy_from(&xdot);
                if adapt {
                    let (th_dot, g_dot) = est_ref.derivatives(&th, &g);
                    out.rows_mut(n, p).copy_from(&th_dot);
                    out.rows_mut(n + p, p * p).copy_from_slice(g_dot.as_slice());
                }
                Ok(out)
            },
            &s,
            t,
            dt,
        );
        match next {
            Ok(s) => {
                let (xs, th, g) = unpack(&s, n, p);
                x = xs;
                est.theta_hat = th;
                est.gamma = g;
                est.symmetrize_gain();
            }
            Err(e) => return Err(abort(k, e, traj)),
        }
    }
    Ok(traj)
}

/// Build the closed loop from `config` and simulate one run.
pub fn simulate(
    config: &SimConfig,
    x0: &StateVec,
    theta_hat0: &ParamVec,
) -> std::result::Result<Trajectory, SimAbort> {
    let built = config
        .validate()
        .and_then(|_| ClosedLoop::from_config(config, &SystemRegistry::with_builtins()));
    match built {
        Ok(plant) => simulate_closed_loop(&plant, &config.run_settings(), x0, theta_hat0),
        Err(cause) => Err(SimAbort {
            step: 0,
            time: 0.0,
            cause,
            partial: Trajectory {
                dt: config.dt,
                records: Vec::new(),
            },
        }),
    }
}

/// Draw `(x0, θ̂0)` uniformly from the configured boxes.
pub fn sample_initial_conditions<R: Rng + ?Sized>(rng: &mut R, boxes: &SamplingBoxes) -> (StateVec, ParamVec) {
    let mut draw = |lo: &[f64], hi: &[f64]| {
        DVector::from_iterator(
            lo.len(),
            lo.iter().zip(hi).map(|(&a, &b)| if a == b { a } else { rng.random_range(a..=b) }),
        )
    };
    let x0 = draw(&boxes.x_lo, &boxes.x_hi);
    let th0 = draw(&boxes.theta_hat_lo, &boxes.theta_hat_hi);
    (x0, th0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rk4_constant_state() {
        let s = DVector::from_column_slice(&[1.0, -2.0]);
        let out = rk4_step(|_, s| Ok(DVector::zeros(s.len())), &s, 0.0, 0.1).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn rk4_exponential_one_step() {
        let s = DVector::from_element(1, 1.0);
        let out = rk4_step(|_, s| Ok(s.clone()), &s, 0.0, 0.1).unwrap();
        // 1 + h + h²/2 + h³/6 + h⁴/24 at h = 0.1
        let taylor = 1.0 + 0.1 + 0.005 + 0.001 / 6.0 + 0.0001 / 24.0;
        assert!((out[0] - taylor).abs() < 1e-15);
        assert!((out[0] - 1.105_170_833).abs() < 1e-9);
        assert!((out[0] - 0.1f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        // ẋ = A x with A a rotation-damping matrix, solved to t = 1.
        let a = DMatrix::from_row_slice(2, 2, &[-0.5, 2.0, -2.0, -0.5]);
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        let exact = (&a * 1.0).exp() * &x0;
        let err = |steps: usize| {
            let dt = 1.0 / steps as f64;
            let mut x = x0.clone();
            for k in 0..steps {
                x = rk4_step(|_, s| Ok(&a * s), &x, k as f64 * dt, dt).unwrap();
            }
            (x - &exact).norm()
        };
        let ratio = err(20) / err(40);
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rk4_flags_non_finite() {
        let s = DVector::from_element(1, 1.0);
        let err = rk4_step(|_, _| Ok(DVector::from_element(1, f64::NAN)), &s, 0.0, 0.1);
        assert!(matches!(err, Err(ControlError::NonFinite { .. })));
    }

    #[test]
    fn default_config_is_valid() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!(c.steps(), 20_000);
    }

    #[test]
    fn config_validation_rejects_bad_ordering() {
        let mut c = SimConfig::default();
        c.dt = 0.2;
        assert!(c.validate().is_err());
        let mut c = SimConfig::default();
        c.sampling.x_lo[0] = -1.0;
        assert!(c.validate().is_err());
        let mut c = SimConfig::default();
        c.runs = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn sampling_stays_in_boxes() {
        let boxes = SimConfig::default().sampling;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut sum_q1 = 0.0;
        let n = 100_000;
        for _ in 0..n {
            let (x, th) = sample_initial_conditions(&mut rng, &boxes);
            assert!((-2.2..=-1.8).contains(&x[0]));
            assert!((1.8..=2.2).contains(&x[1]));
            assert_eq!((x[2], x[3]), (0.0, 0.0));
            assert!(th.iter().all(|v| (0.0..=3.0).contains(v)));
            sum_q1 += x[0];
        }
        // U[−2.2, −1.8] has σ = 0.4/√12
        let sigma = 0.4 / 12f64.sqrt();
        assert!((sum_q1 / n as f64 + 2.0).abs() < 3.0 * sigma / (n as f64).sqrt());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let boxes = SimConfig::default().sampling;
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10).map(|_| sample_initial_conditions(&mut rng, &boxes)).collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn equilibrium_with_perfect_estimate_stays_put() {
        let mut c = SimConfig::default();
        c.horizon = 1.0;
        let x0 = DVector::zeros(4);
        let th = DVector::from_column_slice(&c.theta);
        let traj = simulate(&c, &x0, &th).unwrap();
        assert_eq!(traj.len(), 1001);
        for r in &traj.records {
            assert_eq!(r.x, x0);
            assert_eq!(r.u, DVector::zeros(2));
        }
    }

    #[test]
    fn abort_reports_step_and_partial_records() {
        // Starting at the obstacle centre makes the barrier condition infeasible.
        let c = SimConfig::default();
        let x0 = DVector::from_column_slice(&[-1.0, 1.0, 0.0, 0.0]);
        let err = simulate(&c, &x0, &DVector::zeros(2)).unwrap_err();
        assert_eq!(err.step, 0);
        assert!(matches!(err.cause, ControlError::CbfInfeasible { .. }));
        assert!(err.partial.is_empty());
    }
}
