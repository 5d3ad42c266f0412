//! Batch experiments: Monte Carlo over sampled initial conditions and the
//! initial-uncertainty sweep comparing estimators.

use nalgebra::DVector;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::SystemRegistry;
use crate::error::Result;
use crate::estimation::GainLaw;
use crate::monitor::{issf_report, ISSF_TOL};
use crate::sim::{sample_initial_conditions, simulate_closed_loop, ClosedLoop, SimConfig, Trajectory};

/// Seed of run `index` in a batch seeded with `seed`. Runs with the same
/// index share initial conditions across estimator laws.
pub fn run_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub theta_hat0: Vec<f64>,
    pub final_x_norm: f64,
    pub min_psi0: f64,
    /// `sup_t ‖θ̃(t)‖`
    pub max_ttil: f64,
    /// `min_{t,i} ρi(x(t), max_ttil)`
    pub min_issf_margin: f64,
    /// Records violating the inflated-set monitor.
    pub violations: usize,
    /// Set when the run aborted; the metrics then cover the partial record.
    pub error: Option<String>,
}

/// Aggregate of one estimator law over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub law: GainLaw,
    pub times: Vec<f64>,
    pub ttil_mean: Vec<f64>,
    pub ttil_std: Vec<f64>,
    pub ttil_min: Vec<f64>,
    pub ttil_max: Vec<f64>,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone)]
pub struct MonteCarloBatch {
    pub summary: MonteCarloSummary,
    /// Filled only when trajectories were requested.
    pub trajectories: Vec<Trajectory>,
}

fn run_record(
    plant: &ClosedLoop,
    run: usize,
    seed: u64,
    x0: &DVector<f64>,
    th0: &DVector<f64>,
    traj: &Trajectory,
    error: Option<String>,
) -> RunRecord {
    let (min_margin, violations) = match &plant.barrier {
        Some(b) if !traj.is_empty() => match issf_report(traj, b, ISSF_TOL) {
            Ok(r) => (r.min_margin, r.violations),
            Err(_) => (f64::NAN, traj.len()),
        },
        _ => (f64::NAN, 0),
    };
    RunRecord {
        run,
        seed,
        x0: x0.iter().copied().collect(),
        theta_hat0: th0.iter().copied().collect(),
        final_x_norm: traj.final_state_norm(),
        min_psi0: traj.min_psi0(),
        max_ttil: traj.max_ttil(),
        min_issf_margin: min_margin,
        violations,
        error,
    }
}

/// Pointwise mean, population standard deviation, min and max of `‖θ̃(t)‖`
/// over completed runs.
fn aggregate(law: GainLaw, dt: f64, steps: usize, curves: &[Vec<f64>], runs: Vec<RunRecord>) -> MonteCarloSummary {
    let len = if curves.is_empty() { 0 } else { steps + 1 };
    let mut s = MonteCarloSummary {
        law,
        times: (0..len).map(|k| k as f64 * dt).collect(),
        ttil_mean: Vec::with_capacity(len),
        ttil_std: Vec::with_capacity(len),
        ttil_min: Vec::with_capacity(len),
        ttil_max: Vec::with_capacity(len),
        runs,
    };
    let count = curves.len() as f64;
    for k in 0..len {
        let col = curves.iter().map(|c| c[k]);
        let lo = col.clone().fold(f64::INFINITY, f64::min);
        let hi = col.clone().fold(f64::NEG_INFINITY, f64::max);
        let (mean, std) = if lo == hi {
            (lo, 0.0)
        } else {
            let mean = (col.clone().sum::<f64>() / count).clamp(lo, hi);
            let var = col.map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
            (mean, var.sqrt())
        };
        s.ttil_mean.push(mean);
        s.ttil_std.push(std);
        s.ttil_min.push(lo);
        s.ttil_max.push(hi);
    }
    s
}

/// Run `config.runs` sampled runs for each law in `config.laws`.
///
/// Runs execute in parallel; results are collected in run order so the
/// output depends only on the config.
pub fn monte_carlo(config: &SimConfig, keep_trajectories: bool) -> Result<Vec<MonteCarloBatch>> {
    config.validate()?;
    let registry = SystemRegistry::with_builtins();
    let steps = config.steps();
    config
        .laws
        .iter()
        .map(|&law| {
            let cfg = config.with_law(law);
            let plant = ClosedLoop::from_config(&cfg, &registry)?;
            let settings = cfg.run_settings();
            let results: Vec<(RunRecord, Option<Vec<f64>>, Option<Trajectory>)> = (0..cfg.runs)
                .into_par_iter()
                .map(|run| {
                    let seed = run_seed(cfg.seed, run);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let (x0, th0) = sample_initial_conditions(&mut rng, &cfg.sampling);
                    let (traj, err) = match simulate_closed_loop(&plant, &settings, &x0, &th0) {
                        Ok(t) => (t, None),
                        Err(abort) => {
                            let msg = abort.to_string();
                            (abort.partial, Some(msg))
                        }
                    };
                    let rec = run_record(&plant, run, seed, &x0, &th0, &traj, err);
                    let curve = rec
                        .error
                        .is_none()
                        .then(|| traj.records.iter().map(|r| r.ttil_norm).collect());
                    (rec, curve, keep_trajectories.then_some(traj))
                })
                .collect();
            let mut runs = Vec::with_capacity(results.len());
            let mut curves = Vec::new();
            let mut trajectories = Vec::new();
            for (rec, curve, traj) in results {
                runs.push(rec);
                curves.extend(curve);
                trajectories.extend(traj);
            }
            Ok(MonteCarloBatch {
                summary: aggregate(law, cfg.dt, steps, &curves, runs),
                trajectories,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub law: GainLaw,
    pub theta_hat0: Vec<f64>,
    pub min_psi0: f64,
    pub max_ttil: f64,
    pub final_x_norm: f64,
    pub trajectory: Trajectory,
    pub error: Option<String>,
}

/// One run per `(θ̂0, law)` pair from the nominal `config.x0`.
pub fn uncertainty_sweep(config: &SimConfig, theta_hat0s: &[Vec<f64>], laws: &[GainLaw]) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    if theta_hat0s.is_empty() || laws.is_empty() {
        return Err(crate::error::ControlError::InvalidArgument(
            "sweep needs at least one initial estimate and one law".into(),
        ));
    }
    let registry = SystemRegistry::with_builtins();
    let x0 = DVector::from_column_slice(&config.x0);
    let jobs: Vec<(Vec<f64>, GainLaw)> = theta_hat0s
        .iter()
        .flat_map(|th| laws.iter().map(move |&law| (th.clone(), law)))
        .collect();
    jobs.into_par_iter()
        .map(|(th0, law)| {
            let cfg = config.with_law(law);
            let plant = ClosedLoop::from_config(&cfg, &registry)?;
            let th = DVector::from_column_slice(&th0);
            let (trajectory, error) = match simulate_closed_loop(&plant, &cfg.run_settings(), &x0, &th) {
                Ok(t) => (t, None),
                Err(abort) => {
                    let msg = abort.to_string();
                    (abort.partial, Some(msg))
                }
            };
            Ok(SweepRecord {
                law,
                theta_hat0: th0,
                min_psi0: trajectory.min_psi0(),
                max_ttil: trajectory.max_ttil(),
                final_x_norm: trajectory.final_state_norm(),
                trajectory,
                error,
            })
        })
        .collect()
}
