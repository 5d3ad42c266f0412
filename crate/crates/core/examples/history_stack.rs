// Build regressor pairs from a recorded open-loop trajectory and watch the
// singular-value-maximizing stack fill and then only accept improvements.
//
// ```bash
// cargo run --example history_stack
// ```

use nalgebra::DVector;

use modular_issf::dynamics::{DoubleIntegratorDrag, ParametricAffineSystem};
use modular_issf::estimation::{HistoryStack, IntegrationWindow};
use modular_issf::sim::rk4_step;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sys = DoubleIntegratorDrag;
    let theta = DVector::from_column_slice(&[0.8, 1.4]);
    let dt = 1e-3;
    let mut window = IntegrationWindow::new(0.1, dt)?;
    let mut stack = HistoryStack::new(5, 2)?;
    let mut x = DVector::from_column_slice(&[0.0, 0.0, 1.0, -0.5]);

    let mut offered = 0;
    let mut accepted = 0;
    for k in 0..3000 {
        let t = k as f64 * dt;
        let u = DVector::from_column_slice(&[3.0 * (2.0 * t).sin(), 2.0 * (3.0 * t).cos()]);
        window.push(&sys, t, &x, &u)?;
        if let Some(pair) = window.regressor() {
            offered += 1;
            if stack.insert(pair)? {
                accepted += 1;
                if accepted <= 5 || accepted % 10 == 0 {
                    println!("t = {t:.3}: accepted, size {} sigma_min {:.4e}", stack.len(), stack.sigma_min());
                }
            }
        }
        x = rk4_step(|_, x| sys.true_dynamics(x, &u, &theta), &x, t, dt)?;
    }
    println!("offered {offered}, accepted {accepted}, final sigma_min {:.4e}", stack.sigma_min());
    println!("prediction error at the true parameters: {:.3e}", stack.prediction_error(&theta));
    println!("prediction error at zero: {:.3e}", stack.prediction_error(&DVector::zeros(2)));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
