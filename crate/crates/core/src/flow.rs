//! Prediction-correction Newton flows
//!
//! ```text
//! ẋ = −∇ₓₓF(x,t)⁻¹ [ P ∇ₓF(x,t) + ∇ₓₜF(x,t) ]
//! ```
//!
//! for `F` the objective (unconstrained), the Lagrangian on `z = (x, λ)`
//! (equality constraints), or the perturbed barrier (inequality
//! constraints), and an explicit Euler integrator that shrinks the step
//! whenever the tentative state leaves the field's domain or its Newton
//! system cannot be solved.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::barrier::BarrierField;
use crate::error::{Error, Result};
use crate::field::{lagrangian_field, LagrangianField, TimeVaryingField, TrackingProblem};
use crate::linalg::{self, Cholesky, DenseMatrix};

/// Symmetric positive definite gain `P ⪰ σI`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    p: DenseMatrix,
    sigma: f64,
}

impl GainMatrix {
    /// Validates symmetry and `P ⪰ σI` by factoring `P − (σ − δ)I`.
    pub fn new(p: DenseMatrix, sigma: f64) -> Result<Self> {
        p.check_symmetric()?;
        if !(sigma > 0.0) {
            return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
        }
        let mut shifted = p.clone();
        shifted.add_diagonal(-(sigma - 1e-12 * sigma.max(1.0)));
        Cholesky::factor(&shifted).map_err(|_| {
            Error::InvalidInput(format!("gain matrix is not bounded below by {sigma}·I"))
        })?;
        Ok(Self { p, sigma })
    }

    pub fn scaled_identity(n: usize, sigma: f64) -> Result<Self> {
        Self::new(DenseMatrix::scaled_identity(n, sigma), sigma)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.p.matvec(v)
    }
}

/// A vector field driven by the integrator.
pub trait FlowField {
    fn dim(&self) -> usize;

    fn velocity(&self, state: &[f64], t: f64) -> Result<Vec<f64>>;

    /// Domain test applied to every tentative state before it is accepted.
    fn admissible(&self, _state: &[f64], _t: f64) -> Result<()> {
        Ok(())
    }
}

/// Closure-backed flow field.
pub struct FnFlow<F> {
    dim: usize,
    f: F,
}

impl<F> FnFlow<F>
where
    F: Fn(&[f64], f64) -> Result<Vec<f64>>,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> FlowField for FnFlow<F>
where
    F: Fn(&[f64], f64) -> Result<Vec<f64>>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn velocity(&self, state: &[f64], t: f64) -> Result<Vec<f64>> {
        (self.f)(state, t)
    }
}

/// How the Newton system `∇²F · v = rhs` is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianSolve {
    /// Cholesky; failure propagates as `NotPositiveDefinite`.
    Cholesky,
    /// Pivoted LU on the symmetric saddle matrix.
    Indefinite,
    /// Cholesky with a single retry on `H + 1e-8·(1 + tr(H)/n)·I`.
    RegularizedCholesky,
}

/// The Newton flow of a time-varying field.
pub struct NewtonFlow<F> {
    field: F,
    gain: GainMatrix,
    solve: HessianSolve,
    regularizations: AtomicUsize,
}

impl<F: TimeVaryingField> NewtonFlow<F> {
    pub fn new(field: F, gain: GainMatrix, solve: HessianSolve) -> Result<Self> {
        if gain.dim() != field.dim() {
            return Err(Error::DimensionMismatch(format!(
                "gain is {0}x{0}, field has dimension {1}",
                gain.dim(),
                field.dim()
            )));
        }
        Ok(Self {
            field,
            gain,
            solve,
            regularizations: AtomicUsize::new(0),
        })
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn gain(&self) -> &GainMatrix {
        &self.gain
    }

    /// Number of velocity evaluations that needed the regularized retry.
    pub fn regularization_count(&self) -> usize {
        self.regularizations.load(Ordering::Relaxed)
    }

    fn newton_solve(&self, h: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
        match self.solve {
            HessianSolve::Cholesky => linalg::solve_spd(h, rhs),
            HessianSolve::Indefinite => linalg::solve_symmetric_indefinite(h, rhs),
            HessianSolve::RegularizedCholesky => match linalg::solve_spd(h, rhs) {
                Err(Error::NotPositiveDefinite { .. }) => {
                    self.regularizations.fetch_add(1, Ordering::Relaxed);
                    let n = h.rows().max(1) as f64;
                    let mut hr = h.clone();
                    hr.add_diagonal(1e-8 * (1.0 + h.trace() / n));
                    linalg::solve_spd(&hr, rhs)
                }
                other => other,
            },
        }
    }
}

impl<F: TimeVaryingField> FlowField for NewtonFlow<F> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn velocity(&self, state: &[f64], t: f64) -> Result<Vec<f64>> {
        let grad = self.field.gradient(state, t)?;
        let mut rhs = self.gain.apply(&grad);
        linalg::axpy(1.0, &self.field.time_cross(state, t)?, &mut rhs);
        rhs.iter_mut().for_each(|v| *v = -*v);
        let hess = self.field.hessian(state, t)?;
        self.newton_solve(&hess, &rhs)
    }

    fn admissible(&self, state: &[f64], t: f64) -> Result<()> {
        // Domain-restricted fields report violations from their value.
        self.field.value(state, t).map(|_| ())
    }
}

/// Newton flow on the objective alone.
pub fn unconstrained_flow(
    problem: &TrackingProblem,
    gain: GainMatrix,
) -> Result<NewtonFlow<crate::field::FieldRef>> {
    NewtonFlow::new(problem.objective.clone(), gain, HessianSolve::Cholesky)
}

/// Newton flow on the Lagrangian over `z = (x, λ)`; `gain` is `(n+p)×(n+p)`.
pub fn equality_flow(problem: &TrackingProblem, gain: GainMatrix) -> Result<NewtonFlow<LagrangianField>> {
    NewtonFlow::new(lagrangian_field(problem)?, gain, HessianSolve::Indefinite)
}

/// Newton flow on the perturbed barrier.
pub fn interior_point_flow(barrier: BarrierField, gain: GainMatrix) -> Result<NewtonFlow<BarrierField>> {
    NewtonFlow::new(barrier, gain, HessianSolve::RegularizedCholesky)
}

/// `−∇ₓₓf₀⁻¹ [P∇ₓf₀ + ∇ₓₜf₀]` at a single point.
pub fn unconstrained_flow_field(
    problem: &TrackingProblem,
    gain: &GainMatrix,
    x: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    NewtonFlow::new(&*problem.objective, gain.clone(), HessianSolve::Cholesky)?.velocity(x, t)
}

/// `−∇_zz L⁻¹ [P∇_z L + ∇_zt L]` at a single stacked point `z = (x, λ)`.
pub fn equality_flow_field(
    problem: &TrackingProblem,
    gain: &GainMatrix,
    z: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    equality_flow(problem, gain.clone())?.velocity(z, t)
}

/// `−∇ₓₓΦ̃⁻¹ [P∇ₓΦ̃ + ∇ₓₜΦ̃]` at a single point of `D̃(t)`.
pub fn interior_point_flow_field(
    barrier: &BarrierField,
    gain: &GainMatrix,
    x: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    let flow = NewtonFlow::new(barrier, gain.clone(), HessianSolve::RegularizedCholesky)?;
    flow.admissible(x, t)?;
    flow.velocity(x, t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub max_step: f64,
    pub min_step: f64,
    /// Step multiplier applied after each rejection, in (0, 1).
    pub shrink: f64,
    pub sample_interval: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            max_step: 0.01,
            min_step: 1e-7,
            shrink: 0.5,
            sample_interval: 0.005,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_step > 0.0 && self.min_step <= self.max_step && self.max_step.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "need 0 < min_step <= max_step, got {} and {}",
                self.min_step, self.max_step
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidInput(format!("shrink must lie in (0,1), got {}", self.shrink)));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sample_interval must be positive, got {}",
                self.sample_interval
            )));
        }
        Ok(())
    }
}

/// Integrator state: time, primal point and optional multipliers stacked in
/// `z`, and step statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub z: Vec<f64>,
    pub primal_dim: usize,
    pub last_step: f64,
    pub step_count: usize,
    pub reject_count: usize,
}

impl FlowState {
    pub fn new(t: f64, x: Vec<f64>) -> Self {
        let n = x.len();
        Self {
            t,
            z: x,
            primal_dim: n,
            last_step: 0.0,
            step_count: 0,
            reject_count: 0,
        }
    }

    pub fn with_multipliers(t: f64, x: Vec<f64>, lambda: Vec<f64>) -> Self {
        let n = x.len();
        let mut z = x;
        z.extend(lambda);
        Self {
            primal_dim: n,
            ..Self::new(t, z)
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.z[..self.primal_dim]
    }

    pub fn lambda(&self) -> Option<&[f64]> {
        (self.z.len() > self.primal_dim).then(|| &self.z[self.primal_dim..])
    }
}

/// Sampled history of an integration run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<FlowState>,
    pub final_state: FlowState,
}

/// Errors after which a shorter step may succeed.
fn step_recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::DomainViolation { .. } | Error::NotPositiveDefinite { .. } | Error::Singular { .. }
    )
}

/// Advances `z ← z + h·v(z,t)` from `state0.t` to `t_end` with `h ≤ max_step`.
///
/// Steps are clipped so that the run lands exactly on every sample time
/// `t₀ + k·sample_interval` and on `t_end`. A tentative state is accepted only
/// if it is admissible and the field's velocity can be evaluated there;
/// otherwise the step is multiplied by `shrink` and retried. After a
/// rejection the trial step grows back by `1/shrink` per accepted step.
/// `sampler` sees every sampled state as it is recorded.
pub fn integrate<S>(
    field: &dyn FlowField,
    state0: FlowState,
    t_end: f64,
    opts: &IntegratorOptions,
    mut sampler: S,
) -> Result<Trajectory>
where
    S: FnMut(&FlowState) -> Result<()>,
{
    opts.validate()?;
    if state0.z.len() != field.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} entries, field has dimension {}",
            state0.z.len(),
            field.dim()
        )));
    }
    let t0 = state0.t;
    if !(t_end >= t0) {
        return Err(Error::InvalidInput(format!("t_end {t_end} precedes start time {t0}")));
    }
    field.admissible(&state0.z, t0)?;
    let mut velocity = field.velocity(&state0.z, t0)?;

    let span = t_end - t0;
    let n_samples = (span / opts.sample_interval + 1e-9).floor() as usize + 1;
    let sample_time = |k: usize| t0 + k as f64 * opts.sample_interval;

    let mut state = state0;
    let mut samples = Vec::with_capacity(n_samples);
    sampler(&state)?;
    samples.push(state.clone());
    let mut next_sample = 1;
    let mut trial = opts.max_step;
    let mut tentative = vec![0.0; state.z.len()];

    loop {
        let target = if next_sample < n_samples {
            sample_time(next_sample).min(t_end)
        } else {
            t_end
        };
        let gap = target - state.t;
        if gap <= 1e-12 * state.t.abs().max(1.0) {
            if next_sample < n_samples {
                state.t = target;
                sampler(&state)?;
                samples.push(state.clone());
                next_sample += 1;
                continue;
            }
            break;
        }

        let mut rejected = false;
        let mut h = trial;
        loop {
            let lands = h >= gap * (1.0 - 1e-9);
            let step = if lands { gap } else { h };
            let t_new = if lands { target } else { state.t + step };
            tentative.copy_from_slice(&state.z);
            linalg::axpy(step, &velocity, &mut tentative);
            let outcome = field
                .admissible(&tentative, t_new)
                .and_then(|_| field.velocity(&tentative, t_new));
            match outcome {
                Ok(v) => {
                    std::mem::swap(&mut state.z, &mut tentative);
                    state.t = t_new;
                    state.last_step = step;
                    state.step_count += 1;
                    velocity = v;
                    break;
                }
                Err(e) if step_recoverable(&e) => {
                    state.reject_count += 1;
                    rejected = true;
                    h = step * opts.shrink;
                    if h < opts.min_step {
                        return Err(Error::StepCollapse { t: state.t, step: h });
                    }
                }
                Err(e) => return Err(e),
            }
        }
        trial = if rejected {
            h
        } else {
            (trial / opts.shrink).min(opts.max_step)
        };
    }

    Ok(Trajectory {
        samples,
        final_state: state,
    })
}
