//! Per-entry update rules: plain SGD, fixed-gain PID-refined SGD and the
//! folded fuzzy-PID form, plus the per-entry controller memory.
//!
//! Every rule updates `x_row` and `y_col` simultaneously from their
//! pre-update values.

use crate::error::Result;
use crate::fuzzy::AdaptedParams;
use crate::scalar::Scalar;
use crate::types::{Entry, FactorModel, Hyperparams, PidGains};

/// Magnitude above which a factor counts as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// A touched factor became non-finite or exceeded [`DIVERGENCE_LIMIT`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("factors diverged while updating entry ({row}, {col})")]
pub struct Diverged {
    pub row: usize,
    pub col: usize,
}

/// PID memory of one known entry.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerState<T> {
    /// Error seen on the previous visit (zero before the first one).
    pub prev_error: T,
    /// Sum of every error seen so far, including the current visit.
    pub integral: T,
    pub initialized: bool,
}

impl<T: Scalar> ControllerState<T> {
    /// Feeds `e_t` to the controller and returns the refined error
    /// `kp*e + ki*sum(e) + kd*(e - e_prev)`.
    #[inline]
    pub fn refine(&mut self, e_t: T, g: &PidGains<T>) -> T {
        // Before the first visit prev_error is zero, so the derivative term is kd*e.
        self.integral = self.integral + e_t;
        let refined = g.kp * e_t + g.ki * self.integral + g.kd * (e_t - self.prev_error);
        self.prev_error = e_t;
        self.initialized = true;
        refined
    }
}

/// Functional form of [`ControllerState::refine`].
pub fn pid_refine<T: Scalar>(
    e_t: T,
    state: ControllerState<T>,
    g: &PidGains<T>,
) -> (T, ControllerState<T>) {
    let mut next = state;
    let refined = next.refine(e_t, g);
    (refined, next)
}

/// One controller per training entry, addressed by the entry's position in
/// the training sequence. Never reset between epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerBank<T> {
    states: Vec<ControllerState<T>>,
}

impl<T: Scalar> ControllerBank<T> {
    pub fn new(len: usize) -> Self {
        ControllerBank {
            states: vec![ControllerState::default(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[ControllerState<T>] {
        &self.states
    }

    pub fn get_mut(&mut self, index: usize) -> &mut ControllerState<T> {
        &mut self.states[index]
    }
}

/// `value - <x_row, y_col>`.
pub fn instance_error<T: Scalar>(model: &FactorModel<T>, entry: &Entry<T>) -> Result<T> {
    Ok(entry.value - model.predict(entry.row, entry.col)?)
}

#[inline]
fn raw_error<T: Scalar>(model: &FactorModel<T>, entry: &Entry<T>) -> T {
    entry.value - model.predict_unchecked(entry.row, entry.col)
}

/// `x <- x + eta*(err*y - lambda*x)`, `y <- y + eta*(err*x - lambda*y)`.
#[inline]
fn regularized_step<T: Scalar>(
    model: &mut FactorModel<T>,
    entry: &Entry<T>,
    err: T,
    h: &Hyperparams<T>,
) -> Result<(), Diverged> {
    let (x, y) = model.factors_mut(entry.row, entry.col);
    for (xk, yk) in x.iter_mut().zip(y.iter_mut()) {
        let (xo, yo) = (*xk, *yk);
        *xk = xo + h.eta * (err * yo - h.lambda * xo);
        *yk = yo + h.eta * (err * xo - h.lambda * yo);
    }
    check(x, y, entry)
}

#[inline]
fn check<T: Scalar>(x: &[T], y: &[T], entry: &Entry<T>) -> Result<(), Diverged> {
    let limit = T::lit(DIVERGENCE_LIMIT);
    // `!(|v| <= limit)` also catches NaN.
    if x.iter().chain(y.iter()).any(|v| !(v.abs() <= limit)) {
        Err(Diverged {
            row: entry.row,
            col: entry.col,
        })
    } else {
        Ok(())
    }
}

/// Plain regularised SGD step on one entry.
pub fn sgd_update<T: Scalar>(
    model: &mut FactorModel<T>,
    entry: &Entry<T>,
    h: &Hyperparams<T>,
) -> Result<(), Diverged> {
    let e = raw_error(model, entry);
    regularized_step(model, entry, e, h)
}

/// SGD step driven by the PID-refined error with fixed raw gains.
pub fn psl_update<T: Scalar>(
    model: &mut FactorModel<T>,
    entry: &Entry<T>,
    state: &mut ControllerState<T>,
    h: &Hyperparams<T>,
    g: &PidGains<T>,
) -> Result<(), Diverged> {
    let e = raw_error(model, entry);
    let refined = state.refine(e, g);
    regularized_step(model, entry, refined, h)
}

/// Folded step: `x <- (1 - phi)*x + e_s*y`, `y <- (1 - phi)*y + e_s*x`,
/// where `e_s` is the PID-refined error under learning-rate-folded gains.
pub fn fps_update<T: Scalar>(
    model: &mut FactorModel<T>,
    entry: &Entry<T>,
    state: &mut ControllerState<T>,
    p: &AdaptedParams<T>,
) -> Result<(), Diverged> {
    let e = raw_error(model, entry);
    let scaled = state.refine(e, &p.gains);
    let keep = T::one() - p.phi;
    let (x, y) = model.factors_mut(entry.row, entry.col);
    for (xk, yk) in x.iter_mut().zip(y.iter_mut()) {
        let (xo, yo) = (*xk, *yk);
        *xk = keep * xo + scaled * yo;
        *yk = keep * yo + scaled * xo;
    }
    check(x, y, entry)
}
