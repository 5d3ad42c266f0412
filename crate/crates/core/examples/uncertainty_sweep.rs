// Initial-estimate sweep: how closely gradient descent and RLS with
// forgetting approach the obstacle as the initial estimate worsens.
//
// ```bash
// cargo run --release --example uncertainty_sweep
// ```

use modular_issf::commands::gd_less_safe_somewhere;
use modular_issf::experiment::uncertainty_sweep;
use modular_issf::sim::SimConfig;

pub fn run_example(horizon: f64) -> Result<(), Box<dyn std::error::Error>> {
    let mut config = SimConfig::default();
    config.horizon = horizon;
    let rows = uncertainty_sweep(&config, &config.sweep.theta_hat0, &config.sweep.laws)?;
    for r in &rows {
        println!(
            "{:>10} theta_hat0 = {:?}: min psi0 = {:.4}  max |theta~| = {:.3}",
            r.law, r.theta_hat0, r.min_psi0, r.max_ttil
        );
    }
    println!("gradient descent less safe for some estimate: {}", gd_less_safe_somewhere(&rows));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example(20.0)
}
