//! Frozen-time ground truth: damped Newton for unconstrained minimizers,
//! classic barrier path following for (perturbed) inequality-constrained
//! problems, Newton on the KKT system for equality-constrained ones, and
//! the suboptimality bounds the trajectories are checked against.

use crate::barrier::BarrierField;
use crate::error::{Error, Result};
use crate::field::{lagrangian_field, TimeVaryingField, TrackingProblem};
use crate::linalg::{self, DenseMatrix};
use crate::schedule::{self, ScheduleParams};

const ARMIJO: f64 = 0.3;
const BACKTRACK: f64 = 0.8;
const MAX_NEWTON: usize = 200;
const BARRIER_GROWTH: f64 = 10.0;
/// Slack applied to both sides of every bound check.
pub const BOUND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct StaticSolution {
    pub x_star: Vec<f64>,
    /// One multiplier per inequality (or equality) constraint; empty when
    /// unconstrained.
    pub lambda_star: Vec<f64>,
    pub objective_value: f64,
    pub kkt_residual: f64,
}

/// The four optimality conditions of a (shifted) inequality-constrained
/// problem, each as a nonnegative violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `‖∇f₀ + Σλᵢ∇fᵢ‖`
    pub stationarity: f64,
    /// `maxᵢ |λᵢ (fᵢ − s)|`
    pub complementarity: f64,
    /// `maxᵢ max(0, −λᵢ)`
    pub dual_infeasibility: f64,
    /// `maxᵢ max(0, fᵢ − s)`
    pub primal_infeasibility: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.complementarity)
            .max(self.dual_infeasibility)
            .max(self.primal_infeasibility)
    }
}

/// KKT violations of `(x, λ)` for `min f₀ s.t. fᵢ(x,t) ≤ shift`.
pub fn kkt_residuals(
    problem: &TrackingProblem,
    t: f64,
    shift: f64,
    x: &[f64],
    lambda: &[f64],
) -> Result<KktResiduals> {
    if lambda.len() != problem.num_constraints() {
        return Err(Error::DimensionMismatch(format!(
            "{} multipliers for {} constraints",
            lambda.len(),
            problem.num_constraints()
        )));
    }
    let mut g = problem.objective.gradient(x, t)?;
    let mut out = KktResiduals {
        stationarity: 0.0,
        complementarity: 0.0,
        dual_infeasibility: 0.0,
        primal_infeasibility: 0.0,
    };
    for (fi, &li) in problem.constraints.iter().zip(lambda) {
        let gi = fi.value(x, t)? - shift;
        linalg::axpy(li, &fi.gradient(x, t)?, &mut g);
        out.complementarity = out.complementarity.max((li * gi).abs());
        out.dual_infeasibility = out.dual_infeasibility.max(-li);
        out.primal_infeasibility = out.primal_infeasibility.max(gi);
    }
    out.stationarity = linalg::norm(&g);
    Ok(out)
}

/// Damped Newton with Armijo backtracking. `eval` returns value, gradient and
/// Hessian; `value` is used during the line search and may fail (outside the
/// domain), which counts as a rejected trial. Stops when `‖∇‖ ≤ tol`, or when
/// the Newton decrement reaches rounding level.
fn damped_newton<E, V>(x0: Vec<f64>, tol: f64, eval: E, value: V) -> Result<Vec<f64>>
where
    E: Fn(&[f64]) -> Result<(f64, Vec<f64>, DenseMatrix)>,
    V: Fn(&[f64]) -> Result<f64>,
{
    let mut x = x0;
    let mut trial = vec![0.0; x.len()];
    for _ in 0..MAX_NEWTON {
        let (f, g, h) = eval(&x)?;
        if linalg::norm(&g) <= tol {
            return Ok(x);
        }
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let dx = regularized_spd_solve(&h, &neg_g)?;
        let decrement = -linalg::dot(&g, &dx);
        if decrement <= 1e-15 * (1.0 + f.abs()) {
            // Quadratic convergence region at rounding level: take the full step.
            trial.copy_from_slice(&x);
            linalg::axpy(1.0, &dx, &mut trial);
            if value(&trial).is_ok() {
                std::mem::swap(&mut x, &mut trial);
            }
            return Ok(x);
        }
        let mut tau = 1.0;
        loop {
            trial.copy_from_slice(&x);
            linalg::axpy(tau, &dx, &mut trial);
            if let Ok(fv) = value(&trial) {
                if fv <= f - ARMIJO * tau * decrement {
                    break;
                }
            }
            tau *= BACKTRACK;
            if tau < 1e-14 {
                // No further progress is representable.
                return Ok(x);
            }
        }
        std::mem::swap(&mut x, &mut trial);
    }
    Err(Error::MaxIterations {
        solver: "damped Newton",
        iterations: MAX_NEWTON,
    })
}

fn regularized_spd_solve(h: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    match linalg::solve_spd(h, rhs) {
        Ok(v) => Ok(v),
        Err(Error::NotPositiveDefinite { .. }) => {
            let n = h.rows().max(1) as f64;
            let base = 1.0 + h.trace().abs() / n;
            let mut mu = 1e-10 * base;
            loop {
                let mut hr = h.clone();
                hr.add_diagonal(mu);
                match linalg::solve_spd(&hr, rhs) {
                    Ok(v) => return Ok(v),
                    Err(Error::NotPositiveDefinite { .. }) if mu < base => mu *= 100.0,
                    Err(e) => return Err(e),
                }
            }
        }
        Err(e) => Err(e),
    }
}

/// Minimizes `f(·, t)` at frozen `t` by damped Newton.
pub fn static_minimize_unconstrained(
    f: &dyn TimeVaryingField,
    t: f64,
    x_init: &[f64],
    tol: f64,
) -> Result<StaticSolution> {
    let x = damped_newton(
        x_init.to_vec(),
        tol,
        |x| Ok((f.value(x, t)?, f.gradient(x, t)?, f.hessian(x, t)?)),
        |x| f.value(x, t),
    )?;
    let kkt_residual = linalg::norm(&f.gradient(&x, t)?);
    Ok(StaticSolution {
        objective_value: f.value(&x, t)?,
        x_star: x,
        lambda_star: Vec::new(),
        kkt_residual,
    })
}

/// Log barrier `f₀ − (1/c) Σ log(shift − fᵢ)` frozen at time `t`.
struct FrozenBarrier<'a> {
    problem: &'a TrackingProblem,
    t: f64,
    c: f64,
    shift: f64,
}

impl FrozenBarrier<'_> {
    fn margins(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.problem
            .constraints
            .iter()
            .enumerate()
            .map(|(index, fi)| {
                let margin = self.shift - fi.value(x, self.t)?;
                if margin > crate::barrier::MIN_MARGIN {
                    Ok(margin)
                } else {
                    Err(Error::DomainViolation {
                        t: self.t,
                        index,
                        margin,
                    })
                }
            })
            .collect()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let logs: f64 = self.margins(x)?.iter().map(|m| m.ln()).sum();
        Ok(self.problem.objective.value(x, self.t)? - logs / self.c)
    }

    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>, DenseMatrix)> {
        let t = self.t;
        let margins = self.margins(x)?;
        let mut value = self.problem.objective.value(x, t)?;
        let mut g = self.problem.objective.gradient(x, t)?;
        let mut h = self.problem.objective.hessian(x, t)?;
        for (fi, m) in self.problem.constraints.iter().zip(&margins) {
            let gi = fi.gradient(x, t)?;
            value -= m.ln() / self.c;
            linalg::axpy(1.0 / (self.c * m), &gi, &mut g);
            h.add_outer(1.0 / (self.c * m * m), &gi, &gi);
            h.add_scaled(1.0 / (self.c * m), &fi.hessian(x, t)?);
        }
        Ok((value, g, h))
    }

    fn minimize(&self, x0: Vec<f64>, tol: f64) -> Result<Vec<f64>> {
        damped_newton(x0, tol, |x| self.eval(x), |x| self.value(x))
    }
}

fn strictly_feasible(problem: &TrackingProblem, t: f64, shift: f64, x: &[f64]) -> Result<bool> {
    Ok(shift - problem.max_constraint(x, t)? > crate::barrier::MIN_MARGIN.max(1e-12))
}

/// Finds a point with `fᵢ(x,t) < shift` for all `i` by minimizing the
/// log-sum-exp surrogate `τ log Σ exp((fᵢ − shift)/τ)` at three decreasing
/// temperatures, stopping as soon as a strictly feasible iterate appears.
pub fn phase_one(problem: &TrackingProblem, t: f64, shift: f64, x_init: &[f64]) -> Result<Vec<f64>> {
    if strictly_feasible(problem, t, shift, x_init)? {
        return Ok(x_init.to_vec());
    }
    let n = problem.dim();
    let mut x = x_init.to_vec();
    let mut tau = 0.1 * (problem.max_constraint(&x, t)? - shift).abs().max(1.0);
    for _stage in 0..3 {
        for _ in 0..MAX_NEWTON {
            if strictly_feasible(problem, t, shift, &x)? {
                return Ok(x);
            }
            let (f, g, h) = soft_max_eval(problem, t, shift, tau, &x)?;
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            let mut hr = h.clone();
            hr.add_diagonal(1e-8 * (1.0 + h.trace().abs() / n as f64));
            let dx = regularized_spd_solve(&hr, &neg_g)?;
            let decrement = -linalg::dot(&g, &dx);
            if decrement <= 1e-15 * (1.0 + f.abs()) {
                break;
            }
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-14 {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + step * d).collect();
                let (ft, _, _) = soft_max_eval(problem, t, shift, tau, &trial)?;
                if ft <= f - ARMIJO * step * decrement {
                    x = trial;
                    moved = true;
                    break;
                }
                step *= BACKTRACK;
            }
            if !moved {
                break;
            }
        }
        tau *= 0.1;
    }
    if strictly_feasible(problem, t, shift, &x)? {
        Ok(x)
    } else {
        Err(Error::InfeasibleAtTime { t })
    }
}

fn soft_max_eval(
    problem: &TrackingProblem,
    t: f64,
    shift: f64,
    tau: f64,
    x: &[f64],
) -> Result<(f64, Vec<f64>, DenseMatrix)> {
    let n = problem.dim();
    let vals: Vec<f64> = problem
        .constraints
        .iter()
        .map(|fi| Ok(fi.value(x, t)? - shift))
        .collect::<Result<_>>()?;
    let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = vals.iter().map(|v| ((v - top) / tau).exp()).collect();
    let total: f64 = weights.iter().sum();
    let value = top + tau * total.ln();
    let mut g = vec![0.0; n];
    let mut h = DenseMatrix::zeros(n, n);
    let mut grads = Vec::with_capacity(vals.len());
    for (fi, w) in problem.constraints.iter().zip(&weights) {
        let wi = w / total;
        let gi = fi.gradient(x, t)?;
        linalg::axpy(wi, &gi, &mut g);
        h.add_scaled(wi, &fi.hessian(x, t)?);
        h.add_outer(wi / tau, &gi, &gi);
        grads.push(gi);
    }
    h.add_outer(-1.0 / tau, &g, &g);
    Ok((value, g, h))
}

/// Path following on the static barrier for `min f₀ s.t. fᵢ(x,t) ≤ shift`,
/// multiplying `c` by 10 per stage until `p/c ≤ tol`.
fn path_following(
    problem: &TrackingProblem,
    t: f64,
    shift: f64,
    tol: f64,
    x_init: &[f64],
) -> Result<StaticSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let p = problem.num_constraints();
    if p == 0 {
        return static_minimize_unconstrained(&*problem.objective, t, x_init, tol);
    }
    let mut x = phase_one(problem, t, shift, x_init)?;
    let mut c = 1.0;
    loop {
        let stage = FrozenBarrier {
            problem,
            t,
            c,
            shift,
        };
        x = stage.minimize(x, tol)?;
        if p as f64 / c <= tol {
            let margins = stage.margins(&x)?;
            let mut lambda: Vec<f64> = margins.iter().map(|m| 1.0 / (c * m)).collect();
            let mut kkt = kkt_residuals(problem, t, shift, &x, &lambda)?.max();
            if let Some((xp, lp, kp)) = polish_active_set(problem, t, shift, &x, &lambda, &margins)? {
                if kp < kkt {
                    (x, lambda, kkt) = (xp, lp, kp);
                }
            }
            return Ok(StaticSolution {
                objective_value: problem.objective.value(&x, t)?,
                x_star: x,
                lambda_star: lambda,
                kkt_residual: kkt,
            });
        }
        c *= BARRIER_GROWTH;
    }
}

/// Refines a barrier solution by Newton on the KKT equations of its active
/// set (constraints whose multiplier exceeds their margin). The barrier
/// representation loses accuracy in `λ` as `c` grows; this recovers it.
/// Returns `None` when the active set yields a negative multiplier.
fn polish_active_set(
    problem: &TrackingProblem,
    t: f64,
    shift: f64,
    x0: &[f64],
    lambda0: &[f64],
    margins: &[f64],
) -> Result<Option<(Vec<f64>, Vec<f64>, f64)>> {
    let active: Vec<usize> = (0..lambda0.len()).filter(|&i| lambda0[i] > margins[i]).collect();
    let (n, q) = (x0.len(), active.len());
    if q == 0 || q > n {
        return Ok(None);
    }
    let mut x = x0.to_vec();
    let mut la: Vec<f64> = active.iter().map(|&i| lambda0[i]).collect();
    for _ in 0..4 {
        let mut k = DenseMatrix::zeros(n + q, n + q);
        let mut hl = problem.objective.hessian(&x, t)?;
        let mut rhs = problem.objective.gradient(&x, t)?;
        rhs.resize(n + q, 0.0);
        for (a, &i) in active.iter().enumerate() {
            let fi = &problem.constraints[i];
            let gi = fi.gradient(&x, t)?;
            hl.add_scaled(la[a], &fi.hessian(&x, t)?);
            for j in 0..n {
                k[(n + a, j)] = gi[j];
                k[(j, n + a)] = gi[j];
                rhs[j] += la[a] * gi[j];
            }
            rhs[n + a] = fi.value(&x, t)? - shift;
        }
        k.set_block(0, 0, &hl);
        if linalg::norm(&rhs) <= 1e-15 {
            break;
        }
        let neg: Vec<f64> = rhs.iter().map(|v| -v).collect();
        let d = match linalg::solve_symmetric_indefinite(&k, &neg) {
            Ok(d) => d,
            Err(Error::Singular { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        linalg::axpy(1.0, &d[..n], &mut x);
        for (l, dl) in la.iter_mut().zip(&d[n..]) {
            *l += dl;
        }
    }
    if la.iter().any(|&l| !(l >= 0.0)) {
        return Ok(None);
    }
    let mut lambda = vec![0.0; lambda0.len()];
    for (a, &i) in active.iter().enumerate() {
        lambda[i] = la[a];
    }
    let kkt = kkt_residuals(problem, t, shift, &x, &lambda)?.max();
    Ok(Some((x, lambda, kkt)))
}

/// `x*(t)` and `λ*(t)` of `min f₀ s.t. fᵢ(x,t) ≤ 0`, started from the origin.
pub fn static_solve_constrained(problem: &TrackingProblem, t: f64, tol: f64) -> Result<StaticSolution> {
    static_solve_perturbed(problem, t, 0.0, tol)
}

/// `x̃*(t)` of `min f₀ s.t. fᵢ(x,t) ≤ s_value`, started from the origin.
pub fn static_solve_perturbed(
    problem: &TrackingProblem,
    t: f64,
    s_value: f64,
    tol: f64,
) -> Result<StaticSolution> {
    path_following(problem, t, s_value, tol, &vec![0.0; problem.dim()])
}

/// As [`static_solve_perturbed`], warm-started from `x_init`.
pub fn static_solve_perturbed_from(
    problem: &TrackingProblem,
    t: f64,
    s_value: f64,
    tol: f64,
    x_init: &[f64],
) -> Result<StaticSolution> {
    path_following(problem, t, s_value, tol, x_init)
}

/// `z̃*(t)`, the minimizer of the perturbed barrier with the schedule's
/// `c(t)` and `s(t)` frozen at `t`.
pub fn static_barrier_minimizer(
    barrier: &BarrierField,
    t: f64,
    tol: f64,
    x_init: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let problem = barrier.problem();
    let origin = vec![0.0; problem.dim()];
    let x_init = x_init.unwrap_or(&origin);
    let (c, _) = schedule::barrier_coefficient(barrier.schedule(), t);
    let (s, _) = schedule::slack(barrier.schedule(), t);
    if problem.num_constraints() == 0 {
        return Ok(static_minimize_unconstrained(&*problem.objective, t, x_init, tol)?.x_star);
    }
    let x0 = phase_one(problem, t, s, x_init)?;
    FrozenBarrier {
        problem,
        t,
        c,
        shift: s,
    }
    .minimize(x0, tol)
}

/// `(x*, λ*)` of an equality-constrained problem by Newton on `∇_z L = 0`.
pub fn static_solve_equality(
    problem: &TrackingProblem,
    t: f64,
    z_init: &[f64],
    tol: f64,
) -> Result<StaticSolution> {
    let lagrangian = lagrangian_field(problem)?;
    let n = lagrangian.primal_dim();
    if z_init.len() != lagrangian.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial point has {} entries, expected {}",
            z_init.len(),
            lagrangian.dim()
        )));
    }
    let mut z = z_init.to_vec();
    for _ in 0..MAX_NEWTON {
        let g = lagrangian.gradient(&z, t)?;
        let gn = linalg::norm(&g);
        if gn <= tol {
            return Ok(StaticSolution {
                objective_value: problem.objective.value(&z[..n], t)?,
                x_star: z[..n].to_vec(),
                lambda_star: z[n..].to_vec(),
                kkt_residual: gn,
            });
        }
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let dz = linalg::solve_symmetric_indefinite(&lagrangian.hessian(&z, t)?, &neg_g)?;
        // Backtrack on the residual norm.
        let mut tau = 1.0;
        loop {
            let trial: Vec<f64> = z.iter().zip(&dz).map(|(a, d)| a + tau * d).collect();
            let tn = linalg::norm(&lagrangian.gradient(&trial, t)?);
            if tn <= (1.0 - 1e-4 * tau) * gn || tau < 1e-10 {
                z = trial;
                break;
            }
            tau *= 0.5;
        }
    }
    Err(Error::MaxIterations {
        solver: "equality Newton",
        iterations: MAX_NEWTON,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// `f₀(x*) − f₀(x̃*)`
    pub perturbation_gap: f64,
    /// `Σλᵢ*·s(t)`
    pub perturbation_bound: f64,
    /// `f₀(z̃*) − f₀(x̃*)`
    pub barrier_gap: f64,
    /// `p/c(t)`
    pub barrier_bound: f64,
}

impl BoundReport {
    pub fn perturbation_satisfied(&self) -> bool {
        within(self.perturbation_gap, self.perturbation_bound)
    }

    pub fn barrier_satisfied(&self) -> bool {
        within(self.barrier_gap, self.barrier_bound)
    }

    pub fn satisfied(&self) -> bool {
        self.perturbation_satisfied() && self.barrier_satisfied()
    }

    /// Largest amount by which either gap leaves `[0, bound]`.
    pub fn max_violation(&self) -> f64 {
        violation(self.perturbation_gap, self.perturbation_bound)
            .max(violation(self.barrier_gap, self.barrier_bound))
    }
}

fn within(gap: f64, bound: f64) -> bool {
    gap >= -BOUND_SLACK && gap <= bound + BOUND_SLACK
}

fn violation(gap: f64, bound: f64) -> f64 {
    if gap.is_nan() || bound.is_nan() {
        return f64::INFINITY;
    }
    (-gap).max(gap - bound).max(0.0)
}

/// All frozen-time reference quantities at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSnapshot {
    pub exact: StaticSolution,
    pub perturbed: StaticSolution,
    pub barrier_minimizer: Vec<f64>,
    pub bounds: BoundReport,
}

/// Solves for `x*`, `x̃*`, `z̃*` at `t` and evaluates both suboptimality
/// bounds. `warm` seeds every solve.
pub fn snapshot(
    problem: &TrackingProblem,
    schedule_params: &ScheduleParams,
    t: f64,
    tol: f64,
    warm: Option<&[f64]>,
) -> Result<OracleSnapshot> {
    let origin = vec![0.0; problem.dim()];
    let start = warm.unwrap_or(&origin);
    let (s, _) = schedule::slack(schedule_params, t);
    let (c, _) = schedule::barrier_coefficient(schedule_params, t);
    let exact = path_following(problem, t, 0.0, tol, start)?;
    let perturbed = path_following(problem, t, s, tol, start)?;
    let barrier = BarrierField::new(problem.clone(), *schedule_params)?;
    let barrier_minimizer = static_barrier_minimizer(&barrier, t, tol, Some(start))?;
    let bounds = bounds_from_solutions(problem, t, s, c, &exact, &perturbed, &barrier_minimizer)?;
    Ok(OracleSnapshot {
        exact,
        perturbed,
        barrier_minimizer,
        bounds,
    })
}

fn bounds_from_solutions(
    problem: &TrackingProblem,
    t: f64,
    s: f64,
    c: f64,
    exact: &StaticSolution,
    perturbed: &StaticSolution,
    z_tilde: &[f64],
) -> Result<BoundReport> {
    let f_tilde = perturbed.objective_value;
    Ok(BoundReport {
        perturbation_gap: exact.objective_value - f_tilde,
        perturbation_bound: exact.lambda_star.iter().sum::<f64>() * s,
        barrier_gap: problem.objective.value(z_tilde, t)? - f_tilde,
        barrier_bound: problem.num_constraints() as f64 / c,
    })
}

/// Perturbation and barrier suboptimality at `t` for a given barrier
/// minimizer `z_tilde`.
pub fn evaluate_bounds(
    problem: &TrackingProblem,
    schedule_params: &ScheduleParams,
    t: f64,
    z_tilde: &[f64],
    tol: f64,
) -> Result<BoundReport> {
    let (s, _) = schedule::slack(schedule_params, t);
    let (c, _) = schedule::barrier_coefficient(schedule_params, t);
    let exact = path_following(problem, t, 0.0, tol, z_tilde)?;
    let perturbed = path_following(problem, t, s, tol, z_tilde)?;
    bounds_from_solutions(problem, t, s, c, &exact, &perturbed, z_tilde)
}
