//! Concurrent-learning parameter estimation.
//!
//! Along a trajectory, integrating the dynamics over a window of length Δt
//! gives the linear relation `Y = 𝓕·θ` with
//!
//! ```text
//! Y = x(t) − x(t−Δt) − ∫(f(x) + g(x)u) ds,     𝓕 = ∫F(x) ds,
//! ```
//!
//! which needs only state measurements. Pairs `(Y, 𝓕)` are kept in a
//! history stack that only accepts data raising the minimum singular value
//! of `A = Σ 𝓕ᵀ𝓕`, and the estimate follows
//!
//! ```text
//! θ̂̇ = Γ Σ 𝓕ᵀ(Y − 𝓕θ̂)
//! ```
//!
//! with one of four gain laws for `Γ`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{check_len, ControlVec, ParamVec, ParametricAffineSystem, StateVec};
use crate::error::{ControlError, Result};

/// Absolute slack for the strict-improvement test on replacement.
pub const SIGMA_IMPROVEMENT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorPair {
    pub y: DVector<f64>,
    pub f: DMatrix<f64>,
}

#[derive(Debug, Clone)]
struct Segment {
    known: DVector<f64>,
    regressor: DMatrix<f64>,
}

#[derive(Debug, Clone)]
struct Sample {
    t: f64,
    x: StateVec,
    u: ControlVec,
    known_rate: DVector<f64>,
    actuation: DMatrix<f64>,
    regressor: DMatrix<f64>,
}

/// Sliding window of `(t, x, u)` samples with trapezoid quadrature.
///
/// The input recorded with a sample is held over the following segment,
/// matching sample-and-hold actuation.
#[derive(Debug, Clone)]
pub struct IntegrationWindow {
    segments_needed: usize,
    samples: VecDeque<StateVec>,
    times: VecDeque<f64>,
    segments: VecDeque<Segment>,
    last: Option<Sample>,
}

impl IntegrationWindow {
    /// A window spanning `round(window_dt / dt)` integrator steps.
    pub fn new(window_dt: f64, dt: f64) -> Result<Self> {
        if !(window_dt > 0.0 && dt > 0.0 && dt <= window_dt) {
            return Err(ControlError::InvalidArgument(format!(
                "need 0 < dt <= window_dt (dt = {dt}, window_dt = {window_dt})"
            )));
        }
        Ok(Self::with_segments(((window_dt / dt).round() as usize).max(1)))
    }

    pub fn with_segments(segments: usize) -> Self {
        assert!(segments > 0);
        Self {
            segments_needed: segments,
            samples: VecDeque::with_capacity(segments + 1),
            times: VecDeque::with_capacity(segments + 1),
            segments: VecDeque::with_capacity(segments),
            last: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_ready(&self) -> bool {
        self.segments.len() == self.segments_needed
    }

    /// Time covered by the retained samples.
    pub fn span(&self) -> f64 {
        match (self.times.front(), self.times.back()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn push(
        &mut self,
        sys: &dyn ParametricAffineSystem,
        t: f64,
        x: &StateVec,
        u: &ControlVec,
    ) -> Result<()> {
        check_len("control", sys.dims().control, u.len())?;
        if let Some(prev) = &self.last {
            if !(t > prev.t) {
                return Err(ControlError::InvalidArgument(format!(
                    "window timestamps must increase ({t} after {})",
                    prev.t
                )));
            }
        }
        let actuation = sys.actuation(x)?;
        let mut known_rate = sys.drift(x)?;
        known_rate.gemv(1.0, &actuation, u, 1.0);
        let sample = Sample {
            t,
            x: x.clone(),
            u: u.clone(),
            known_rate,
            actuation,
            regressor: sys.regressor(x)?,
        };

        if let Some(prev) = &self.last {
            let h = t - prev.t;
            // ∫(f + g u_prev) over the segment; the held input is the previous one.
            let mut known = &prev.known_rate + &sample.known_rate;
            known.gemv(1.0, &sample.actuation, &prev.u, 1.0);
            known.gemv(-1.0, &sample.actuation, &sample.u, 1.0);
            known *= 0.5 * h;
            let regressor = (&prev.regressor + &sample.regressor) * (0.5 * h);
            self.segments.push_back(Segment { known, regressor });
            if self.segments.len() > self.segments_needed {
                self.segments.pop_front();
            }
        }
        self.samples.push_back(sample.x.clone());
        self.times.push_back(t);
        if self.samples.len() > self.segments_needed + 1 {
            self.samples.pop_front();
            self.times.pop_front();
        }
        self.last = Some(sample);
        Ok(())
    }

    /// The window regressor pair, or `None` until the window has warmed up.
    pub fn regressor(&self) -> Option<RegressorPair> {
        if !self.is_ready() {
            return None;
        }
        let first = self.segments.front()?;
        let mut known = first.known.clone();
        let mut f = first.regressor.clone();
        for seg in self.segments.iter().skip(1) {
            known += &seg.known;
            f += &seg.regressor;
        }
        let y = self.samples.back()? - self.samples.front()? - known;
        Some(RegressorPair { y, f })
    }
}

/// Minimum singular value; closed form for the symmetric 1×1 and 2×2 cases.
pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    match m.shape() {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => m[(0, 0)].abs(),
        (2, 2) if m[(0, 1)] == m[(1, 0)] => {
            let (lo, hi) = sym2_eigenvalues(m);
            lo.abs().min(hi.abs())
        }
        _ => m.clone().singular_values().min(),
    }
}

/// Induced 2-norm.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    match m.shape() {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => m[(0, 0)].abs(),
        (2, 2) if m[(0, 1)] == m[(1, 0)] => {
            let (lo, hi) = sym2_eigenvalues(m);
            lo.abs().max(hi.abs())
        }
        _ => m.clone().singular_values().max(),
    }
}

fn sym2_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    let (a, b, d) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    let mean = 0.5 * (a + d);
    let rad = (0.5 * (a - d)).hypot(b);
    (mean - rad, mean + rad)
}

/// Finite store of regressor pairs with cached information matrix.
#[derive(Debug, Clone)]
pub struct HistoryStack {
    capacity: usize,
    entries: Vec<RegressorPair>,
    grams: Vec<DMatrix<f64>>,
    cross: Vec<DVector<f64>>,
    info: DMatrix<f64>,
    info_cross: DVector<f64>,
    sigma_min: f64,
}

impl HistoryStack {
    pub fn new(capacity: usize, params: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(ControlError::InvalidArgument(
                "history stack capacity must be at least 1".into(),
            ));
        }
        Ok(Self {
            capacity,
            entries: Vec::with_capacity(capacity),
            grams: Vec::with_capacity(capacity),
            cross: Vec::with_capacity(capacity),
            info: DMatrix::zeros(params, params),
            info_cross: DVector::zeros(params),
            sigma_min: 0.0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    pub fn entries(&self) -> &[RegressorPair] {
        &self.entries
    }

    /// Cached `A = Σ 𝓕ᵀ𝓕`.
    pub fn information(&self) -> &DMatrix<f64> {
        &self.info
    }

    /// Cached `Σ 𝓕ᵀY`.
    pub fn information_cross(&self) -> &DVector<f64> {
        &self.info_cross
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    /// `A` recomputed from the entries.
    pub fn recompute_information(&self) -> DMatrix<f64> {
        let p = self.info.nrows();
        self.entries
            .iter()
            .fold(DMatrix::zeros(p, p), |acc, e| acc + e.f.tr_mul(&e.f))
    }

    /// Singular-value-maximizing insertion. Returns whether the pair was kept.
    pub fn insert(&mut self, pair: RegressorPair) -> Result<bool> {
        let p = self.info.nrows();
        check_len("regressor columns", p, pair.f.ncols())?;
        check_len("regressor rows", pair.y.len(), pair.f.nrows())?;
        if !pair.y.iter().chain(pair.f.iter()).all(|v| v.is_finite()) {
            return Err(ControlError::NonFinite {
                what: "regressor pair",
            });
        }
        let gram = pair.f.tr_mul(&pair.f);
        let cross = pair.f.tr_mul(&pair.y);

        if !self.is_full() {
            self.info += &gram;
            self.info_cross += &cross;
            self.entries.push(pair);
            self.grams.push(gram);
            self.cross.push(cross);
            self.sigma_min = min_singular_value(&self.info);
            return Ok(true);
        }

        let base = &self.info + &gram;
        let mut best: Option<(usize, f64)> = None;
        let mut trial = base.clone();
        for (j, g) in self.grams.iter().enumerate() {
            trial.copy_from(&base);
            trial -= g;
            let s = min_singular_value(&trial);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((j, s));
            }
        }
        match best {
            Some((j, s)) if s > self.sigma_min + SIGMA_IMPROVEMENT_SLACK => {
                self.info += &gram;
                self.info -= &self.grams[j];
                self.info_cross += &cross;
                self.info_cross -= &self.cross[j];
                self.entries[j] = pair;
                self.grams[j] = gram;
                self.cross[j] = cross;
                self.sigma_min = min_singular_value(&self.info);
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    /// `E(θ̂) = Σ ‖Y − 𝓕θ̂‖²`.
    pub fn prediction_error(&self, theta_hat: &ParamVec) -> f64 {
        self.entries
            .iter()
            .map(|e| (&e.y - &e.f * theta_hat).norm_squared())
            .sum()
    }

    /// `Σ 𝓕ᵀ(Y − 𝓕θ̂)`, evaluated from the cached sums.
    pub fn prediction_gradient_sum(&self, theta_hat: &ParamVec) -> DVector<f64> {
        let mut out = self.info_cross.clone();
        out.gemv(-1.0, &self.info, theta_hat, 1.0);
        out
    }
}

/// Gain-matrix dynamics selecting the update-law variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GainLaw {
    /// `Γ̇ = 0`
    Gd,
    /// `Γ̇ = −ΓAΓ`
    Rls,
    /// `Γ̇ = βΓ − ΓAΓ`
    RlsForget,
    /// `Γ̇ = β(1 − ‖Γ‖/Γ̄)Γ − ΓAΓ`
    RlsVarForget,
}

impl GainLaw {
    pub const ALL: [GainLaw; 4] = [Self::Gd, Self::Rls, Self::RlsForget, Self::RlsVarForget];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Gd => "gd",
            Self::Rls => "rls",
            Self::RlsForget => "rls_forget",
            Self::RlsVarForget => "rls_varforget",
        }
    }
}

impl fmt::Display for GainLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GainLaw {
    type Err = ControlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gd" => Ok(Self::Gd),
            "rls" => Ok(Self::Rls),
            "rls_forget" => Ok(Self::RlsForget),
            "rls_varforget" => Ok(Self::RlsVarForget),
            other => Err(ControlError::UnknownLaw(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainParams {
    /// Forgetting factor β (1/s).
    pub beta: f64,
    /// Gain bound Γ̄ for the variable-forgetting law.
    pub gamma_bar: f64,
}

/// `Γ Σ 𝓕ᵀ(Y − 𝓕θ̂)`.
pub fn theta_hat_dot(stack: &HistoryStack, theta_hat: &ParamVec, gamma: &DMatrix<f64>) -> DVector<f64> {
    gamma * stack.prediction_gradient_sum(theta_hat)
}

/// Right-hand side of the selected gain law, with `info = Σ 𝓕ᵀ𝓕`.
pub fn gamma_dot(info: &DMatrix<f64>, gamma: &DMatrix<f64>, law: GainLaw, params: GainParams) -> DMatrix<f64> {
    let shrink = || gamma * info * gamma;
    match law {
        GainLaw::Gd => DMatrix::zeros(gamma.nrows(), gamma.ncols()),
        GainLaw::Rls => -shrink(),
        GainLaw::RlsForget => gamma * params.beta - shrink(),
        GainLaw::RlsVarForget => {
            let scale = params.beta * (1.0 - spectral_norm(gamma) / params.gamma_bar);
            gamma * scale - shrink()
        }
    }
}

/// `‖θ − θ̂‖`.
pub fn estimation_error_norm(theta_hat: &ParamVec, theta: &ParamVec) -> f64 {
    (theta - theta_hat).norm()
}

/// Estimator configuration shared by all runs of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSettings {
    pub law: GainLaw,
    pub capacity: usize,
    /// `Γ(0) = gamma0 · I`.
    pub gamma0: f64,
    pub params: GainParams,
    pub window_dt: f64,
}

impl EstimatorSettings {
    pub fn validate(&self) -> Result<()> {
        let GainParams { beta, gamma_bar } = self.params;
        if self.capacity == 0 {
            return Err(ControlError::InvalidArgument("estimator.N must be >= 1".into()));
        }
        if !(self.gamma0 > 0.0) {
            return Err(ControlError::InvalidArgument("estimator.gamma0 must be > 0".into()));
        }
        if matches!(self.law, GainLaw::RlsForget | GainLaw::RlsVarForget) && !(beta > 0.0) {
            return Err(ControlError::InvalidArgument("estimator.beta must be > 0".into()));
        }
        if self.law == GainLaw::RlsVarForget && !(gamma_bar > 0.0) {
            return Err(ControlError::InvalidArgument("estimator.gamma_bar must be > 0".into()));
        }
        Ok(())
    }
}

/// Per-simulation learning state.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    pub theta_hat: ParamVec,
    pub gamma: DMatrix<f64>,
    pub stack: HistoryStack,
    pub window: IntegrationWindow,
    pub law: GainLaw,
    pub params: GainParams,
}

impl EstimatorState {
    pub fn new(settings: &EstimatorSettings, theta_hat0: ParamVec, dt: f64) -> Result<Self> {
        settings.validate()?;
        let p = theta_hat0.len();
        Ok(Self {
            gamma: DMatrix::identity(p, p) * settings.gamma0,
            stack: HistoryStack::new(settings.capacity, p)?,
            window: IntegrationWindow::new(settings.window_dt, dt)?,
            theta_hat: theta_hat0,
            law: settings.law,
            params: settings.params,
        })
    }

    /// Add a measurement and, once the window is warm, offer the resulting
    /// pair to the stack. Returns whether a pair was accepted.
    pub fn record(
        &mut self,
        sys: &dyn ParametricAffineSystem,
        t: f64,
        x: &StateVec,
        u: &ControlVec,
    ) -> Result<bool> {
        self.window.push(sys, t, x, u)?;
        match self.window.regressor() {
            Some(pair) => self.stack.insert(pair),
            None => Ok(false),
        }
    }

    /// `(θ̂̇, Γ̇)` at the given point with the current (frozen) stack.
    pub fn derivatives(&self, theta_hat: &ParamVec, gamma: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
        (
            theta_hat_dot(&self.stack, theta_hat, gamma),
            gamma_dot(self.stack.information(), gamma, self.law, self.params),
        )
    }

    pub fn symmetrize_gain(&mut self) {
        let sym = (&self.gamma + self.gamma.transpose()) * 0.5;
        self.gamma = sym;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DoubleIntegratorDrag;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn embedded(f11: f64, f22: f64) -> DMatrix<f64> {
        let mut f = DMatrix::zeros(4, 2);
        f[(0, 0)] = f11;
        f[(1, 1)] = f22;
        f
    }

    fn pair(f: DMatrix<f64>, theta: &DVector<f64>) -> RegressorPair {
        RegressorPair { y: &f * theta, f }
    }

    #[test]
    fn window_not_ready_until_span_reached() {
        let sys = DoubleIntegratorDrag;
        let mut w = IntegrationWindow::new(0.1, 0.01).unwrap();
        let zero4 = v(&[0.0; 4]);
        let zero2 = v(&[0.0; 2]);
        for k in 0..10 {
            w.push(&sys, k as f64 * 0.01, &zero4, &zero2).unwrap();
            assert!(w.regressor().is_none());
        }
        w.push(&sys, 0.1, &zero4, &zero2).unwrap();
        let p = w.regressor().unwrap();
        assert_eq!(p.y, DVector::zeros(4));
        assert_eq!(p.f, DMatrix::zeros(4, 2));
        assert!((w.span() - 0.1).abs() < 1e-12);
        assert_eq!(w.len(), 11);
    }

    #[test]
    fn window_rejects_non_increasing_time() {
        let sys = DoubleIntegratorDrag;
        let mut w = IntegrationWindow::with_segments(3);
        w.push(&sys, 0.0, &v(&[0.0; 4]), &v(&[0.0; 2])).unwrap();
        assert!(w.push(&sys, 0.0, &v(&[0.0; 4]), &v(&[0.0; 2])).is_err());
    }

    #[test]
    fn drag_free_kinematics_give_zero_y() {
        // Exact constant-acceleration motion with θ = 0: Y must vanish up to
        // the trapezoid error in ∫q̇, which is exact for linear q̇.
        let sys = DoubleIntegratorDrag;
        let (q0, v0, a) = ([0.3, -0.2], [0.5, 1.0], [0.4, -0.7]);
        let state = |t: f64| {
            v(&[
                q0[0] + v0[0] * t + 0.5 * a[0] * t * t,
                q0[1] + v0[1] * t + 0.5 * a[1] * t * t,
                v0[0] + a[0] * t,
                v0[1] + a[1] * t,
            ])
        };
        let mut errs = Vec::new();
        for &dt in &[0.01, 0.005] {
            let mut w = IntegrationWindow::new(0.1, dt).unwrap();
            let k = (0.1 / dt).round() as usize;
            for i in 0..=k {
                let t = i as f64 * dt;
                w.push(&sys, t, &state(t), &v(&a)).unwrap();
            }
            let p = w.regressor().unwrap();
            assert!(p.y.amax() < 1e-12, "Y = {}", p.y);
            // ∫F ds along the exact path by fine Simpson's rule.
            let fine = 2000;
            let h = 0.1 / fine as f64;
            let mut exact = DMatrix::zeros(4, 2);
            for i in 0..=fine {
                let wgt = if i == 0 || i == fine { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                exact += sys.regressor(&state(i as f64 * h)).unwrap() * (wgt * h / 3.0);
            }
            errs.push((p.f - exact).amax());
        }
        // second-order quadrature
        assert!(errs[0] / errs[1] > 3.5, "ratio {}", errs[0] / errs[1]);
    }

    #[test]
    fn empty_stack_accepts() {
        let mut s = HistoryStack::new(3, 2).unwrap();
        assert!(s.insert(pair(embedded(0.3, 0.0), &v(&[1.0, 1.0]))).unwrap());
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn orthogonal_candidate_replaces_duplicate() {
        let theta = v(&[0.8, 1.4]);
        let mut s = HistoryStack::new(2, 2).unwrap();
        s.insert(pair(embedded(1.0, 0.0), &theta)).unwrap();
        s.insert(pair(embedded(1.0, 0.0), &theta)).unwrap();
        // A = diag(2, 0)
        assert!(s.sigma_min().abs() < 1e-15);
        assert!(s.insert(pair(embedded(0.0, 1.0), &theta)).unwrap());
        // A = diag(1, 1)
        assert!((s.sigma_min() - 1.0).abs() < 1e-12);
        assert_eq!(s.len(), 2);
        assert_eq!(s.information(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn zero_candidate_rejected_when_full() {
        let theta = v(&[0.8, 1.4]);
        let mut s = HistoryStack::new(2, 2).unwrap();
        s.insert(pair(embedded(1.0, 0.0), &theta)).unwrap();
        s.insert(pair(embedded(0.0, 1.0), &theta)).unwrap();
        assert!(!s.insert(pair(DMatrix::zeros(4, 2), &theta)).unwrap());
    }

    #[test]
    fn prediction_error_examples() {
        let mut s = HistoryStack::new(4, 2).unwrap();
        s.insert(RegressorPair {
            y: v(&[1.0, 0.0, 0.0, 0.0]),
            f: embedded(1.0, 0.0),
        })
        .unwrap();
        assert_eq!(s.prediction_error(&v(&[0.0, 0.0])), 1.0);

        let theta = v(&[0.8, 1.4]);
        let mut s = HistoryStack::new(4, 2).unwrap();
        s.insert(pair(embedded(0.5, 2.0), &theta)).unwrap();
        assert!(s.prediction_error(&theta) < 1e-28);
    }

    #[test]
    fn theta_hat_dot_examples() {
        let s = HistoryStack::new(4, 2).unwrap();
        assert_eq!(theta_hat_dot(&s, &v(&[1.0, 2.0]), &DMatrix::identity(2, 2)), v(&[0.0, 0.0]));

        let theta = v(&[0.8, 1.4]);
        let mut s = HistoryStack::new(4, 2).unwrap();
        s.insert(pair(embedded(1.0, 1.0), &theta)).unwrap();
        let d = theta_hat_dot(&s, &v(&[0.0, 0.0]), &DMatrix::identity(2, 2));
        assert!((d - &theta).amax() < 1e-15);
    }

    #[test]
    fn theta_hat_dot_is_half_the_negative_gradient() {
        // With E = Σ‖Y − 𝓕θ̂‖², ∇E = −2Σ𝓕ᵀ(Y − 𝓕θ̂), so θ̂̇ = −½Γ∇E.
        let mut s = HistoryStack::new(3, 2).unwrap();
        let mut f1 = DMatrix::zeros(4, 2);
        f1[(2, 0)] = -0.3;
        f1[(3, 1)] = 0.7;
        f1[(0, 1)] = 0.2;
        s.insert(RegressorPair { y: v(&[0.1, -0.2, 0.4, 0.3]), f: f1 }).unwrap();
        s.insert(RegressorPair {
            y: v(&[0.0, 0.5, -0.1, 0.2]),
            f: embedded(0.9, -0.4),
        })
        .unwrap();
        let gamma = DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 2.0]);
        let th = v(&[0.4, -1.1]);
        let h = 1e-6;
        let grad = DVector::from_fn(2, |i, _| {
            let mut e = DVector::zeros(2);
            e[i] = h;
            (s.prediction_error(&(&th + &e)) - s.prediction_error(&(&th - &e))) / (2.0 * h)
        });
        let expected = &gamma * grad * -0.5;
        let got = theta_hat_dot(&s, &th, &gamma);
        assert!((got - expected).amax() < 1e-8);
    }

    #[test]
    fn gamma_dot_examples() {
        let params = GainParams { beta: 1.0, gamma_bar: 4.0 };
        let g = DMatrix::from_element(1, 1, 2.0);
        let a = DMatrix::from_element(1, 1, 3.0);
        assert_eq!(gamma_dot(&a, &g, GainLaw::Gd, params)[(0, 0)], 0.0);
        assert_eq!(gamma_dot(&a, &g, GainLaw::Rls, params)[(0, 0)], -12.0);
        assert_eq!(gamma_dot(&a, &g, GainLaw::RlsForget, params)[(0, 0)], 2.0 - 12.0);
        assert_eq!(gamma_dot(&a, &g, GainLaw::RlsVarForget, params)[(0, 0)], -11.0);
        let big = DMatrix::from_row_slice(2, 2, &[5.0, 1.0, 1.0, 3.0]);
        assert_eq!(gamma_dot(&big, &big, GainLaw::Gd, params), DMatrix::zeros(2, 2));
    }

    #[test]
    fn law_names_roundtrip() {
        for law in GainLaw::ALL {
            assert_eq!(law.as_str().parse::<GainLaw>().unwrap(), law);
        }
        assert!(matches!("newton".parse::<GainLaw>(), Err(ControlError::UnknownLaw(_))));
    }

    #[test]
    fn error_norm_examples() {
        let theta = v(&[0.8, 1.4]);
        assert_eq!(estimation_error_norm(&theta, &theta), 0.0);
        assert!((estimation_error_norm(&v(&[0.0, 0.0]), &theta) - 2.6f64.sqrt()).abs() < 1e-15);
        assert!((estimation_error_norm(&v(&[0.0, 0.0]), &theta) - 1.6125).abs() < 1e-4);
        let th = v(&[0.3, 0.1]);
        assert_eq!(
            estimation_error_norm(&th, &theta),
            estimation_error_norm(&-&th, &-&theta)
        );
    }

    #[test]
    fn spectral_norm_matches_svd() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.5, 1.5, -2.0]);
        let svd = m.clone().singular_values();
        assert!((spectral_norm(&m) - svd.max()).abs() < 1e-12);
        assert!((min_singular_value(&m) - svd.min()).abs() < 1e-12);
        let m3 = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((spectral_norm(&m3) - 5.0).abs() < 1e-12);
        assert!((min_singular_value(&m3) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn cached_information_and_sigma_monotone(
            entries in prop::collection::vec(prop::array::uniform4(-2.0f64..2.0), 1..60),
            cap in 1usize..8,
        ) {
            let theta = v(&[0.8, 1.4]);
            let mut s = HistoryStack::new(cap, 2).unwrap();
            let mut prev_sigma = None;
            for e in entries {
                let mut f = DMatrix::zeros(4, 2);
                f[(2, 0)] = e[0];
                f[(3, 1)] = e[1];
                f[(0, 0)] = e[2];
                f[(1, 1)] = e[3];
                let was_full = s.is_full();
                let accepted = s.insert(pair(f, &theta)).unwrap();
                prop_assert!(s.len() <= cap);
                if was_full && accepted {
                    let before: f64 = prev_sigma.unwrap();
                    prop_assert!(s.sigma_min() > before);
                }
                if s.is_full() {
                    prev_sigma = Some(s.sigma_min());
                }
                let diff = (s.recompute_information() - s.information()).amax();
                prop_assert!(diff <= 1e-10);
                prop_assert!(s.prediction_error(&v(&[0.1, 0.2])) >= 0.0);
            }
        }
    }
}
