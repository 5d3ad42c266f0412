// Plug a different model into the closed loop: a planar double integrator
// with linear (viscous) drag, registered under its own name.
//
// ```bash
// cargo run --release --example custom_system
// ```

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use modular_issf::dynamics::{Dims, ParametricAffineSystem, StateVec, SystemRegistry};
use modular_issf::sim::{simulate_closed_loop, ClosedLoop, SimConfig};

#[derive(Debug)]
struct ViscousDoubleIntegrator;

impl ParametricAffineSystem for ViscousDoubleIntegrator {
    fn name(&self) -> &str {
        "viscous_double_integrator"
    }

    fn dims(&self) -> Dims {
        Dims { state: 4, control: 2, params: 2 }
    }

    fn eval_drift(&self, x: &StateVec) -> DVector<f64> {
        DVector::from_column_slice(&[x[2], x[3], 0.0, 0.0])
    }

    fn eval_regressor(&self, x: &StateVec) -> DMatrix<f64> {
        let mut f = DMatrix::zeros(4, 2);
        f[(2, 0)] = -x[2];
        f[(3, 1)] = -x[3];
        f
    }

    fn eval_actuation(&self, _x: &StateVec) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(4, 2);
        g[(2, 0)] = 1.0;
        g[(3, 1)] = 1.0;
        g
    }
}

fn viscous() -> Arc<dyn ParametricAffineSystem> {
    Arc::new(ViscousDoubleIntegrator)
}

pub fn run_example(horizon: f64) -> Result<(), Box<dyn std::error::Error>> {
    let mut registry = SystemRegistry::with_builtins();
    registry.register("viscous_double_integrator", viscous);
    println!("registered systems: {:?}", registry.names().collect::<Vec<_>>());

    let mut config = SimConfig::default();
    config.horizon = horizon;
    config.system = "viscous_double_integrator".into();
    config.theta = vec![0.5, 2.0];
    let plant = ClosedLoop::from_config(&config, &registry)?;

    let x0 = DVector::from_column_slice(&config.x0);
    let th0 = DVector::zeros(2);
    let traj = simulate_closed_loop(&plant, &config.run_settings(), &x0, &th0)?;
    let last = traj.last().expect("non-empty trajectory");
    println!(
        "|x(T)| = {:.4}  min psi0 = {:.4}  theta_hat(T) = [{:.4}, {:.4}]",
        last.x.norm(),
        traj.min_psi0(),
        last.theta_hat[0],
        last.theta_hat[1]
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example(20.0)
}
