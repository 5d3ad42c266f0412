//! Modular adaptive safety-critical control.
//!
//! Stabilization and safety are designed independently of the parameter
//! estimator: an exponential ISS control Lyapunov function gives a min-norm
//! stabilizing controller, an ISSf high order control barrier function
//! filters it, and any estimator from the concurrent-learning family
//! supplies the shared parameter estimates.
//!
//! * [`dynamics`]: parametric control-affine models.
//! * [`estimation`]: integral regressors, history stack, update laws.
//! * [`qp`]: closed-form single-constraint QPs.
//! * [`clf`]: eISS-CLF and the min-norm controller.
//! * [`cbf`]: ψ-chains, inflated sets and the safety filter.
//! * [`sim`], [`experiment`], [`monitor`]: simulation and batch studies.
//! * [`config`], [`output`], [`commands`]: text config, CSV output and
//!   the command drivers behind the `issf-sim` binary.

pub mod cbf;
pub mod clf;
pub mod commands;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod monitor;
pub mod output;
pub mod qp;
pub mod sim;

pub use error::{ControlError, Result};
