use thiserror::Error;

/// Errors raised by the control, estimation and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// The single affine constraint of a QP has an empty feasible set.
    #[error("infeasible constraint: a = 0 with b = {b}")]
    InfeasibleConstraint { b: f64 },

    #[error("CLF infeasible at state {state:?}")]
    ClfInfeasible { state: Vec<f64> },

    #[error("ISSf-HOCBF violated at state {state:?}")]
    CbfInfeasible { state: Vec<f64> },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown estimator law `{0}` (expected gd, rls, rls_forget or rls_varforget)")]
    UnknownLaw(String),

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("unsupported: {0}")]
    Unsupported(&'static str),
}

pub type Result<T, E = ControlError> = std::result::Result<T, E>;
