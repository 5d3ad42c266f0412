// One closed-loop run of the obstacle-avoidance scenario from
// `x0 = [-2, 2, 0, 0]` with zero initial parameter estimates.
//
// ```bash
// cargo run --release --example nominal_run
// ```

use nalgebra::DVector;

use modular_issf::cbf::HocbfChain;
use modular_issf::dynamics::SystemRegistry;
use modular_issf::estimation::GainLaw;
use modular_issf::monitor::{issf_report, ISSF_TOL};
use modular_issf::sim::{simulate, ClosedLoop, SimConfig};

pub fn run_example(horizon: f64) -> Result<(), Box<dyn std::error::Error>> {
    let mut config = SimConfig::default();
    config.horizon = horizon;
    let plant = ClosedLoop::from_config(&config, &SystemRegistry::with_builtins())?;
    let barrier: &HocbfChain = plant.barrier.as_ref().expect("obstacle barrier");

    let x0 = DVector::from_column_slice(&config.x0);
    let th0 = DVector::from_column_slice(&config.theta_hat0);
    for law in GainLaw::ALL {
        let started = std::time::Instant::now();
        let traj = simulate(&config.with_law(law), &x0, &th0)?;
        let issf = issf_report(&traj, barrier, ISSF_TOL)?;
        let last = traj.last().expect("non-empty trajectory");
        println!(
            "{law:>14}: |x(T)| = {:.4}  min psi0 = {:.4}  |theta~(T)| = {:.2e}  delta = {:.3}  min rho = {:.4}  ({:.2?})",
            last.x.norm(),
            traj.min_psi0(),
            last.ttil_norm,
            issf.delta,
            issf.min_margin,
            started.elapsed(),
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example(20.0)
}
