// Pointwise: the min-norm CLF input at a few states on the way to the
// obstacle, and what the barrier filter changes.
//
// ```bash
// cargo run --example safety_filter
// ```

use std::sync::Arc;

use nalgebra::DVector;

use modular_issf::cbf::{gamma_recursion, ClassKappa, HocbfChain, ObstacleChain};
use modular_issf::clf::EissClf;
use modular_issf::dynamics::{DoubleIntegratorDrag, ParametricAffineSystem};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sys = DoubleIntegratorDrag;
    let clf = EissClf::double_integrator(1.0, 20.0)?;
    let chain = ObstacleChain::new([-1.0, 1.0], 0.5, 0.0, ClassKappa::linear(1.0)?, ClassKappa::linear(0.5)?)?;
    let barrier = HocbfChain::new(Arc::new(chain), 1.0)?;
    let theta_hat = DVector::from_column_slice(&[0.0, 0.0]);

    let states = [
        [-2.0, 2.0, 0.0, 0.0],
        [-1.6, 1.6, 0.6, -0.6],
        [-1.5, 1.3, 0.8, -0.2],
        [0.5, 0.5, 0.0, 0.0],
    ];
    for s in states {
        let x = DVector::from_column_slice(&s);
        let u_ref = clf.controller(&sys, &x, &theta_hat)?;
        let u = barrier.safety_filter(&sys, &x, &theta_hat, &u_ref)?;
        let c = barrier.constraint(&sys, &x, &theta_hat)?;
        let psi = barrier.psi(&x);
        println!(
            "x = {s:?}\n  psi = [{:.3}, {:.3}]  u_ref = [{:.3}, {:.3}]  u = [{:.3}, {:.3}]  slack = {:.2e}",
            psi[0], psi[1], u_ref[0], u_ref[1], u[0], u[1], c.slack(&u)
        );
    }

    let delta = 0.5;
    let gammas = gamma_recursion(barrier.chain().alphas(), 1.0, delta)?;
    println!("inflation at delta = {delta}: {gammas:?} (delta^2/2 = {})", delta * delta / 2.0);
    println!("system: {} {:?}", sys.name(), sys.dims());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
