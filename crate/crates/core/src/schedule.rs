//! Barrier coefficient `c(t) = c₀·e^(γ_c·t)` and constraint slack
//! `s(t) = s₀·e^(−α·t)`.

use crate::error::{Error, Result};
use crate::field::TrackingProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub c0: f64,
    pub gamma_c: f64,
    pub s0: f64,
    pub alpha: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            c0: 1.0,
            gamma_c: 6.0,
            s0: 0.0,
            alpha: 10.0,
        }
    }
}

impl ScheduleParams {
    pub fn new(c0: f64, gamma_c: f64, s0: f64, alpha: f64) -> Result<Self> {
        let p = Self {
            c0,
            gamma_c,
            s0,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::InvalidInput(format!("c0 must be positive, got {}", self.c0)));
        }
        if !(self.gamma_c >= 0.0 && self.gamma_c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "gamma_c must be nonnegative, got {}",
                self.gamma_c
            )));
        }
        if !(self.s0 >= 0.0 && self.s0.is_finite()) {
            return Err(Error::InvalidInput(format!("s0 must be nonnegative, got {}", self.s0)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn with_s0(mut self, s0: f64) -> Self {
        self.s0 = s0;
        self
    }
}

/// Returns `(c(t), ċ(t))`.
pub fn barrier_coefficient(p: &ScheduleParams, t: f64) -> (f64, f64) {
    let c = p.c0 * (p.gamma_c * t).exp();
    (c, p.gamma_c * c)
}

/// Returns `(s(t), ṡ(t))`.
pub fn slack(p: &ScheduleParams, t: f64) -> (f64, f64) {
    let s = p.s0 * (-p.alpha * t).exp();
    (s, -p.alpha * s)
}

/// Default margin added to a positive initial constraint maximum:
/// `1e-3·max(1, |max fᵢ|)`.
pub fn default_epsilon(max_violation: f64) -> f64 {
    1e-3 * max_violation.abs().max(1.0)
}

/// Initial slack making `x₀` strictly feasible for the perturbed problem:
/// zero if `maxᵢ fᵢ(x₀,0) ≤ 0`, otherwise `maxᵢ fᵢ(x₀,0) + ε`.
///
/// With `epsilon = None` the relative default of [`default_epsilon`] is used.
/// A start exactly on the boundary yields `s₀ = 0`; the barrier then rejects
/// it as a domain violation.
pub fn initial_slack(problem: &TrackingProblem, x0: &[f64], epsilon: Option<f64>) -> Result<f64> {
    let worst = problem.max_constraint(x0, 0.0)?;
    if worst <= 0.0 {
        return Ok(0.0);
    }
    let eps = epsilon.unwrap_or_else(|| default_epsilon(worst));
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {eps}")));
    }
    Ok(worst + eps)
}
