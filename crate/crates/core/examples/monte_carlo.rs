// Monte Carlo batch over sampled initial conditions for every estimator
// law, reporting the `‖θ̃‖` statistics and the safety margins.
//
// ```bash
// cargo run --release --example monte_carlo
// ```

use modular_issf::estimation::GainLaw;
use modular_issf::experiment::monte_carlo;
use modular_issf::sim::SimConfig;

pub fn run_example(runs: usize, horizon: f64) -> Result<(), Box<dyn std::error::Error>> {
    let mut config = SimConfig::default();
    config.runs = runs;
    config.horizon = horizon;
    config.laws = GainLaw::ALL.to_vec();

    let started = std::time::Instant::now();
    let batches = monte_carlo(&config, false)?;
    println!("{} runs x {} laws in {:.2?}", runs, batches.len(), started.elapsed());
    for b in &batches {
        let s = &b.summary;
        let last = s.times.len() - 1;
        let area: f64 = s.ttil_mean.iter().sum::<f64>() * config.dt / s.ttil_mean[0];
        let worst_x = s.runs.iter().map(|r| r.final_x_norm).fold(0.0, f64::max);
        let worst_margin = s.runs.iter().map(|r| r.min_issf_margin).fold(f64::INFINITY, f64::min);
        let min_psi0 = s.runs.iter().map(|r| r.min_psi0).fold(f64::INFINITY, f64::min);
        println!(
            "{:>14}: mean |theta~| {:.3} -> {:.2e} (area {:.3})  max |x(T)| {:.4}  min psi0 {:.4}  min rho {:.4}",
            s.law, s.ttil_mean[0], s.ttil_mean[last], area, worst_x, min_psi0, worst_margin
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example(25, 20.0)
}
