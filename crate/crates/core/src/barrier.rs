//! The perturbed time-varying log barrier
//!
//! ```text
//! Φ̃(x,t) = f₀(x,t) − (1/c(t)) Σᵢ log(s(t) − fᵢ(x,t)),   x ∈ D̃(t) = {x : fᵢ(x,t) < s(t)}
//! ```
//!
//! exposed as a [`TimeVaryingField`]. Evaluating outside `D̃(t)` returns
//! [`Error::DomainViolation`] rather than an infinite value.

use crate::error::{Error, Result};
use crate::field::{TimeVaryingField, TrackingProblem};
use crate::linalg::{self, DenseMatrix};
use crate::schedule::{self, ScheduleParams};

/// Margins `s − fᵢ` at or below this are treated as outside the domain.
pub const MIN_MARGIN: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct BarrierField {
    problem: TrackingProblem,
    schedule: ScheduleParams,
}

/// Per-constraint quantities shared by all barrier evaluators.
struct Terms {
    c: f64,
    c_dot: f64,
    s_dot: f64,
    /// `s − fᵢ`
    margins: Vec<f64>,
}

impl BarrierField {
    pub fn new(problem: TrackingProblem, schedule: ScheduleParams) -> Result<Self> {
        schedule.validate()?;
        Ok(Self { problem, schedule })
    }

    pub fn problem(&self) -> &TrackingProblem {
        &self.problem
    }

    pub fn schedule(&self) -> &ScheduleParams {
        &self.schedule
    }

    fn terms(&self, x: &[f64], t: f64) -> Result<Terms> {
        let (c, c_dot) = schedule::barrier_coefficient(&self.schedule, t);
        let (s, s_dot) = schedule::slack(&self.schedule, t);
        let mut margins = Vec::with_capacity(self.problem.constraints.len());
        for (index, fi) in self.problem.constraints.iter().enumerate() {
            let margin = s - fi.value(x, t)?;
            if !(margin > MIN_MARGIN) {
                return Err(Error::DomainViolation { t, index, margin });
            }
            margins.push(margin);
        }
        Ok(Terms {
            c,
            c_dot,
            s_dot,
            margins,
        })
    }

    /// Ok iff `x ∈ D̃(t)`.
    pub fn check_domain(&self, x: &[f64], t: f64) -> Result<()> {
        self.terms(x, t).map(|_| ())
    }

    /// Dual estimates `λ̃ᵢ = 1/(c(t)·(s(t) − fᵢ(x,t)))`.
    pub fn dual_estimates(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let terms = self.terms(x, t)?;
        Ok(terms.margins.iter().map(|m| 1.0 / (terms.c * m)).collect())
    }

    fn unconstrained(&self) -> bool {
        self.problem.constraints.is_empty()
    }
}

impl TimeVaryingField for BarrierField {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        if self.unconstrained() {
            return self.problem.objective.value(x, t);
        }
        let terms = self.terms(x, t)?;
        let logs: f64 = terms.margins.iter().map(|m| m.ln()).sum();
        Ok(self.problem.objective.value(x, t)? - logs / terms.c)
    }

    fn gradient(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        if self.unconstrained() {
            return self.problem.objective.gradient(x, t);
        }
        let terms = self.terms(x, t)?;
        let mut g = self.problem.objective.gradient(x, t)?;
        for (fi, m) in self.problem.constraints.iter().zip(&terms.margins) {
            linalg::axpy(1.0 / (terms.c * m), &fi.gradient(x, t)?, &mut g);
        }
        Ok(g)
    }

    fn hessian(&self, x: &[f64], t: f64) -> Result<DenseMatrix> {
        if self.unconstrained() {
            return self.problem.objective.hessian(x, t);
        }
        let terms = self.terms(x, t)?;
        let mut h = self.problem.objective.hessian(x, t)?;
        for (fi, m) in self.problem.constraints.iter().zip(&terms.margins) {
            let gi = fi.gradient(x, t)?;
            h.add_outer(1.0 / (terms.c * m * m), &gi, &gi);
            h.add_scaled(1.0 / (terms.c * m), &fi.hessian(x, t)?);
        }
        Ok(h)
    }

    /// ```text
    /// ∇ₓₜΦ̃ = ∇ₓₜf₀ − (ċ/c²) Σ ∇fᵢ/(s−fᵢ)
    ///        + (1/c) Σ [ ∇ₓₜfᵢ/(s−fᵢ) − ∇fᵢ (ṡ − ∂ₜfᵢ)/(s−fᵢ)² ]
    /// ```
    fn time_cross(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        if self.unconstrained() {
            return self.problem.objective.time_cross(x, t);
        }
        let terms = self.terms(x, t)?;
        let (c, c_dot) = (terms.c, terms.c_dot);
        let mut out = self.problem.objective.time_cross(x, t)?;
        for (fi, m) in self.problem.constraints.iter().zip(&terms.margins) {
            let gi = fi.gradient(x, t)?;
            let dfi_dt = fi.time_partial(x, t)?;
            let coeff = -c_dot / (c * c * m) - (terms.s_dot - dfi_dt) / (c * m * m);
            linalg::axpy(coeff, &gi, &mut out);
            linalg::axpy(1.0 / (c * m), &fi.time_cross(x, t)?, &mut out);
        }
        Ok(out)
    }

    /// `∂ₜΦ̃ = ∂ₜf₀ + (ċ/c²) Σ log(s−fᵢ) − (1/c) Σ (ṡ − ∂ₜfᵢ)/(s−fᵢ)`
    fn time_partial(&self, x: &[f64], t: f64) -> Result<f64> {
        if self.unconstrained() {
            return self.problem.objective.time_partial(x, t);
        }
        let terms = self.terms(x, t)?;
        let (c, c_dot) = (terms.c, terms.c_dot);
        let mut out = self.problem.objective.time_partial(x, t)?;
        for (fi, m) in self.problem.constraints.iter().zip(&terms.margins) {
            let dfi_dt = fi.time_partial(x, t)?;
            out += c_dot / (c * c) * m.ln() - (terms.s_dot - dfi_dt) / (c * m);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{validate_derivatives, FieldRef, QuadraticField};
    use std::sync::Arc;

    /// min x² s.t. x − 1 ≤ 0 (or a moving variant x − y₀ − t·ẏ ≤ 0).
    fn scalar_problem(offset: f64, rate: f64) -> TrackingProblem {
        let obj: FieldRef = Arc::new(QuadraticField::moving_target(&[0.0], &[0.0]));
        let c: FieldRef = Arc::new(
            QuadraticField::new(DenseMatrix::zeros(1, 1), vec![1.0], vec![0.0], [-offset, -rate, 0.0])
                .unwrap(),
        );
        TrackingProblem::new(obj, 2.0).unwrap().with_constraints(vec![c]).unwrap()
    }

    fn fixed_schedule(c0: f64, gamma_c: f64) -> ScheduleParams {
        ScheduleParams::new(c0, gamma_c, 0.0, 1.0).unwrap()
    }

    #[test]
    fn scalar_value_gradient_hessian() {
        let b = BarrierField::new(scalar_problem(1.0, 0.0), fixed_schedule(1.0, 0.0)).unwrap();
        let x = [0.5];
        assert!((b.value(&x, 0.0).unwrap() - (0.25 - 0.5f64.ln())).abs() < 1e-15);
        assert!((b.gradient(&x, 0.0).unwrap()[0] - 3.0).abs() < 1e-14);
        assert!((b.hessian(&x, 0.0).unwrap()[(0, 0)] - 6.0).abs() < 1e-13);
    }

    #[test]
    fn boundary_is_a_domain_violation() {
        let b = BarrierField::new(scalar_problem(1.0, 0.0), fixed_schedule(1.0, 0.0)).unwrap();
        assert!(matches!(b.value(&[1.0], 0.0), Err(Error::DomainViolation { index: 0, .. })));
        assert!(matches!(b.gradient(&[1.5], 0.0), Err(Error::DomainViolation { .. })));
        assert!(b.check_domain(&[0.999], 0.0).is_ok());
    }

    #[test]
    fn growing_coefficient_time_cross() {
        // c(t) = e^t: only the ċ/c² term survives
        let b = BarrierField::new(scalar_problem(1.0, 0.0), fixed_schedule(1.0, 1.0)).unwrap();
        assert!((b.time_cross(&[0.5], 0.0).unwrap()[0] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn moving_constraint_time_cross() {
        // f₁ = x − t, at x = −0.5 + t so that s − f₁ = 0.5
        let b = BarrierField::new(scalar_problem(0.0, 1.0), fixed_schedule(1.0, 0.0)).unwrap();
        let t = 0.3;
        let tc = b.time_cross(&[t - 0.5], t).unwrap()[0];
        assert!((tc + 4.0).abs() < 1e-12, "{tc}");
    }

    #[test]
    fn static_problem_has_zero_time_cross() {
        let b = BarrierField::new(scalar_problem(1.0, 0.0), fixed_schedule(3.0, 0.0)).unwrap();
        assert_eq!(b.time_cross(&[0.2], 0.7).unwrap(), vec![0.0]);
    }

    #[test]
    fn empty_barrier_is_the_objective() {
        let obj: FieldRef = Arc::new(QuadraticField::moving_target(&[0.3, 1.0], &[1.0, -2.0]));
        let p = TrackingProblem::new(obj.clone(), 2.0).unwrap();
        let b = BarrierField::new(p, ScheduleParams::default()).unwrap();
        let (x, t) = ([0.1, -0.7], 0.4);
        assert_eq!(b.value(&x, t).unwrap().to_bits(), obj.value(&x, t).unwrap().to_bits());
        assert_eq!(b.gradient(&x, t).unwrap(), obj.gradient(&x, t).unwrap());
        assert_eq!(b.hessian(&x, t).unwrap(), obj.hessian(&x, t).unwrap());
        assert_eq!(b.time_cross(&x, t).unwrap(), obj.time_cross(&x, t).unwrap());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let sched = ScheduleParams::new(0.8, 2.0, 0.6, 3.0).unwrap();
        let b = BarrierField::new(scalar_problem(0.2, 1.5), sched).unwrap();
        for (x, t) in [(-0.3, 0.1), (0.1, 0.5), (-2.0, 1.2)] {
            let r = validate_derivatives(&b, &[x], t, 1e-6, 1e-6);
            assert!(r.passed(), "x={x} t={t}: {r:?}");
        }
    }

    #[test]
    fn dual_estimates_follow_margins() {
        let b = BarrierField::new(scalar_problem(1.0, 0.0), fixed_schedule(4.0, 0.0)).unwrap();
        let l = b.dual_estimates(&[0.5], 0.0).unwrap();
        assert!((l[0] - 0.5).abs() < 1e-15);
    }
}
