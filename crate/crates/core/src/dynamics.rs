//! Parametric control-affine systems `ẋ = f(x) + F(x)θ + g(x)u`.
//!
//! A system is described by three evaluators: the known drift `f`, the
//! regressor `F` multiplying the unknown parameters, and the actuation
//! matrix `g`. The built-in model is a planar double integrator with
//! quadratic drag, `q̈ = −D q̇‖q̇‖ + u`, with `θ = [D1, D2]`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{ControlError, Result};

pub type StateVec = DVector<f64>;
pub type ControlVec = DVector<f64>;
pub type ParamVec = DVector<f64>;

/// State, input and parameter dimensions `(n, m, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub state: usize,
    pub control: usize,
    pub params: usize,
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(ControlError::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}

pub(crate) fn check_finite(what: &'static str, v: &DVector<f64>) -> Result<()> {
    if v.iter().all(|e| e.is_finite()) {
        Ok(())
    } else {
        Err(ControlError::NonFinite { what })
    }
}

/// A control-affine system with linearly parameterized uncertainty.
///
/// Implementors provide the raw evaluators; the provided methods validate
/// dimensions and assemble the full vector field.
pub trait ParametricAffineSystem: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn dims(&self) -> Dims;

    /// `f(x)`, length n. Called with a validated `x`.
    fn eval_drift(&self, x: &StateVec) -> DVector<f64>;
    /// `F(x)`, n×p.
    fn eval_regressor(&self, x: &StateVec) -> DMatrix<f64>;
    /// `g(x)`, n×m.
    fn eval_actuation(&self, x: &StateVec) -> DMatrix<f64>;

    fn drift(&self, x: &StateVec) -> Result<DVector<f64>> {
        check_len("state", self.dims().state, x.len())?;
        check_finite("state", x)?;
        Ok(self.eval_drift(x))
    }

    fn regressor(&self, x: &StateVec) -> Result<DMatrix<f64>> {
        check_len("state", self.dims().state, x.len())?;
        check_finite("state", x)?;
        Ok(self.eval_regressor(x))
    }

    fn actuation(&self, x: &StateVec) -> Result<DMatrix<f64>> {
        check_len("state", self.dims().state, x.len())?;
        check_finite("state", x)?;
        Ok(self.eval_actuation(x))
    }

    /// `f(x) + F(x)θ + g(x)u` with the ground-truth parameters.
    fn true_dynamics(&self, x: &StateVec, u: &ControlVec, theta: &ParamVec) -> Result<DVector<f64>> {
        self.estimated_dynamics(x, u, theta)
    }

    /// Nominal dynamics `f(x) + F(x)θ̂ + g(x)u`; the true dynamics differ by
    /// `F(x)(θ − θ̂)`.
    fn estimated_dynamics(
        &self,
        x: &StateVec,
        u: &ControlVec,
        theta_hat: &ParamVec,
    ) -> Result<DVector<f64>> {
        let d = self.dims();
        check_len("state", d.state, x.len())?;
        check_len("control", d.control, u.len())?;
        check_len("parameter", d.params, theta_hat.len())?;
        check_finite("state", x)?;
        let mut out = self.eval_drift(x);
        out.gemv(1.0, &self.eval_regressor(x), theta_hat, 1.0);
        out.gemv(1.0, &self.eval_actuation(x), u, 1.0);
        Ok(out)
    }
}

/// Planar double integrator with quadratic drag, `x = [q1, q2, q̇1, q̇2]`.
///
/// The drag sign lives in the regressor (rows 3–4 are `−diag(q̇‖q̇‖)`), so
/// the drag coefficients in `θ` are positive.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleIntegratorDrag;

impl DoubleIntegratorDrag {
    pub const NAME: &'static str = "double_integrator_drag";
}

impl ParametricAffineSystem for DoubleIntegratorDrag {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn dims(&self) -> Dims {
        Dims {
            state: 4,
            control: 2,
            params: 2,
        }
    }

    fn eval_drift(&self, x: &StateVec) -> DVector<f64> {
        DVector::from_column_slice(&[x[2], x[3], 0.0, 0.0])
    }

    fn eval_regressor(&self, x: &StateVec) -> DMatrix<f64> {
        let speed = x[2].hypot(x[3]);
        let mut out = DMatrix::zeros(4, 2);
        out[(2, 0)] = -x[2] * speed;
        out[(3, 1)] = -x[3] * speed;
        out
    }

    fn eval_actuation(&self, _x: &StateVec) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(4, 2);
        out[(2, 0)] = 1.0;
        out[(3, 1)] = 1.0;
        out
    }
}

pub type SystemFactory = fn() -> Arc<dyn ParametricAffineSystem>;

/// Name-keyed lookup of system models used for config selection.
#[derive(Clone)]
pub struct SystemRegistry {
    factories: BTreeMap<String, SystemFactory>,
}

impl SystemRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register(DoubleIntegratorDrag::NAME, || Arc::new(DoubleIntegratorDrag));
        reg
    }

    pub fn register(&mut self, name: &str, factory: SystemFactory) {
        self.factories.insert(name.to_owned(), factory);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ParametricAffineSystem>> {
        self.factories
            .get(name)
            .map(|f| f())
            .ok_or_else(|| ControlError::UnknownSystem(name.to_owned()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }
}

impl Default for SystemRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl fmt::Debug for SystemRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn drift_examples() {
        let sys = DoubleIntegratorDrag;
        assert_eq!(sys.drift(&v(&[0.0; 4])).unwrap(), v(&[0.0; 4]));
        assert_eq!(
            sys.drift(&v(&[1.0, 2.0, 0.5, -0.5])).unwrap(),
            v(&[0.5, -0.5, 0.0, 0.0])
        );
        assert_eq!(
            sys.drift(&v(&[0.0, 0.0, 3.0, 4.0])).unwrap(),
            v(&[3.0, 4.0, 0.0, 0.0])
        );
    }

    #[test]
    fn drift_rejects_wrong_length() {
        let err = DoubleIntegratorDrag.drift(&v(&[0.0; 3])).unwrap_err();
        assert!(matches!(err, ControlError::DimensionMismatch { expected: 4, got: 3, .. }));
    }

    #[test]
    fn regressor_examples() {
        let sys = DoubleIntegratorDrag;
        assert_eq!(sys.regressor(&v(&[1.0, 1.0, 0.0, 0.0])).unwrap(), DMatrix::zeros(4, 2));

        let f = sys.regressor(&v(&[0.0, 0.0, 3.0, 4.0])).unwrap();
        assert_eq!(f.rows(0, 2), DMatrix::zeros(2, 2));
        assert_eq!(f.rows(2, 2), DMatrix::from_row_slice(2, 2, &[-15.0, 0.0, 0.0, -20.0]));

        let f = sys.regressor(&v(&[0.0, 0.0, 1.0, 0.0])).unwrap();
        assert_eq!(f.rows(2, 2), DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn actuation_is_constant() {
        let sys = DoubleIntegratorDrag;
        let expected =
            DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert_eq!(sys.actuation(&v(&[0.0; 4])).unwrap(), expected);
        assert_eq!(sys.actuation(&v(&[5.0; 4])).unwrap(), expected);
        assert_eq!(expected.shape(), (4, 2));
    }

    #[test]
    fn true_dynamics_examples() {
        let sys = DoubleIntegratorDrag;
        let theta = v(&[0.8, 1.4]);
        assert_eq!(
            sys.true_dynamics(&v(&[0.0; 4]), &v(&[0.0, 0.0]), &theta).unwrap(),
            v(&[0.0; 4])
        );
        let x = v(&[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(
            sys.true_dynamics(&x, &v(&[0.0, 0.0]), &theta).unwrap(),
            v(&[1.0, 0.0, -0.8, 0.0])
        );
        assert_eq!(
            sys.true_dynamics(&x, &v(&[2.0, 3.0]), &theta).unwrap(),
            v(&[1.0, 0.0, 1.2, 3.0])
        );
        assert!(sys.true_dynamics(&x, &v(&[1.0]), &theta).is_err());
    }

    #[test]
    fn estimated_dynamics_decomposition() {
        let sys = DoubleIntegratorDrag;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = DVector::from_fn(4, |_, _| rng.random_range(-3.0..3.0));
            let u = DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
            let theta = DVector::from_fn(2, |_, _| rng.random_range(0.0..3.0));
            let theta_hat = DVector::from_fn(2, |_, _| rng.random_range(0.0..3.0));
            let lhs = sys.true_dynamics(&x, &u, &theta).unwrap();
            let rhs = sys.estimated_dynamics(&x, &u, &theta_hat).unwrap()
                + sys.regressor(&x).unwrap() * (&theta - &theta_hat);
            assert!((lhs - rhs).amax() < 1e-12);
        }
        let x = v(&[0.3, -0.2, 1.1, 0.4]);
        let u = v(&[0.5, -1.0]);
        let theta = v(&[0.8, 1.4]);
        assert_eq!(
            sys.estimated_dynamics(&x, &u, &theta).unwrap(),
            sys.true_dynamics(&x, &u, &theta).unwrap()
        );
        let nominal = sys.drift(&x).unwrap() + sys.actuation(&x).unwrap() * &u;
        assert_eq!(sys.estimated_dynamics(&x, &u, &v(&[0.0, 0.0])).unwrap(), nominal);
    }

    #[test]
    fn regressor_is_lipschitz_on_a_box() {
        // On [−3,3]⁴ the entries q̇i‖q̇‖ have gradient norm ≤ 2‖q̇‖ ≤ 2·3√2.
        let sys = DoubleIntegratorDrag;
        let bound = 2.0 * 3.0 * 2f64.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = DVector::from_fn(4, |_, _| rng.random_range(-3.0..3.0));
            let y = DVector::from_fn(4, |_, _| rng.random_range(-3.0..3.0));
            let df = (sys.regressor(&x).unwrap() - sys.regressor(&y).unwrap()).norm();
            assert!(df <= bound * (&x - &y).norm() + 1e-12);
        }
    }

    #[test]
    fn registry_lookup() {
        let reg = SystemRegistry::with_builtins();
        let sys = reg.get("double_integrator_drag").unwrap();
        assert_eq!(sys.dims().state, 4);
        assert!(matches!(reg.get("nope"), Err(ControlError::UnknownSystem(_))));
    }
}
