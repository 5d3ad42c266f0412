// The four gain laws on a fixed history stack: parameter error and gain
// size after a few seconds of pure estimation.
//
// ```bash
// cargo run --example estimator_laws
// ```

use nalgebra::{DMatrix, DVector};

use modular_issf::estimation::{
    estimation_error_norm, gamma_dot, spectral_norm, theta_hat_dot, GainLaw, GainParams, HistoryStack, RegressorPair,
};
use modular_issf::sim::rk4_step;

pub fn run_example(seconds: f64) -> Result<(), Box<dyn std::error::Error>> {
    let theta = DVector::from_column_slice(&[0.8, 1.4]);
    let mut stack = HistoryStack::new(4, 2)?;
    for f in [[0.3, 0.0, 0.0, 0.05], [0.1, 0.02, -0.04, 0.2], [0.0, 0.01, 0.2, 0.1]] {
        let f = DMatrix::from_row_slice(2, 2, &f);
        stack.insert(RegressorPair { y: &f * &theta, f })?;
    }
    println!("stack size {}, sigma_min {:.4e}", stack.len(), stack.sigma_min());

    let params = GainParams { beta: 1.0, gamma_bar: 1000.0 };
    let dt = 1e-3;
    for law in GainLaw::ALL {
        // state = [θ̂; vec Γ]
        let mut s = DVector::zeros(6);
        s[2] = 100.0;
        s[5] = 100.0;
        for k in 0..(seconds / dt).round() as usize {
            s = rk4_step(
                |_, s| {
                    let th = s.rows(0, 2).into_owned();
                    let g = DMatrix::from_column_slice(2, 2, &s.as_slice()[2..]);
                    let dth = theta_hat_dot(&stack, &th, &g);
                    let dg = gamma_dot(stack.information(), &g, law, params);
                    Ok(DVector::from_iterator(6, dth.iter().chain(dg.iter()).copied()))
                },
                &s,
                k as f64 * dt,
                dt,
            )?;
        }
        let th = s.rows(0, 2).into_owned();
        let g = DMatrix::from_column_slice(2, 2, &s.as_slice()[2..]);
        println!(
            "{:>14}: |theta~| = {:.3e}  |Gamma| = {:.3}",
            law,
            estimation_error_norm(&th, &theta),
            spectral_norm(&g)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example(5.0)
}
