//! Run orchestration: builds a scenario from a [`RunConfig`], integrates the
//! matching flow, evaluates the oracle at every sample, and exports the
//! resulting [`RunTrace`] as CSV and a summary table.
//!
//! Config files are flat `key = value` text; `#` starts a comment. The
//! `scenario` key selects the defaults every other key then overrides.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::barrier::BarrierField;
use crate::error::{Error, Result};
use crate::field::{
    lagrangian_field, validate_derivatives, AffineEquality, DerivativeReport, FieldRef, QuadraticField,
    TimeVaryingField, TrackingProblem,
};
use crate::flow::{self, integrate, FlowState, GainMatrix, IntegratorOptions};
use crate::linalg::{self, DenseMatrix};
use crate::oracle::{self, BoundReport};
use crate::scenario;
use crate::schedule::{self, ScheduleParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// One agent tracking a blend of two moving targets, unconstrained.
    Switching,
    /// Two agents, each held within a disk around its own target.
    TwoAgent,
    /// `min ‖x‖²` subject to `x₁ + x₂ = 2 + t`, started infeasible.
    Equality,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [Self::Switching, Self::TwoAgent, Self::Equality];

    pub fn name(self) -> &'static str {
        match self {
            Self::Switching => "switching",
            Self::TwoAgent => "two-agent",
            Self::Equality => "equality",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown scenario '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    /// Gain `P = σI`.
    pub sigma: f64,
    pub c0: f64,
    pub gamma_c: f64,
    pub alpha: f64,
    /// Initial slack; `None` derives it from the start point.
    pub s0: Option<f64>,
    /// Margin used when deriving `s0`; `None` uses the relative default.
    pub epsilon: Option<f64>,
    pub t_end: f64,
    pub integrator: IntegratorOptions,
    pub oracle_tol: f64,
    pub seed: u64,
    /// Interior waypoints per target.
    pub waypoints: usize,
    /// Basis functions per path coordinate.
    pub degree: usize,
    pub t_int: f64,
    pub gamma_switch: f64,
    pub radius: f64,
    /// Window for the decay-rate fits in the summary.
    pub fit_start: f64,
    pub fit_end: f64,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(scenario: ScenarioKind) -> Self {
        let schedule = ScheduleParams::default();
        let mut cfg = Self {
            scenario,
            sigma: 10.0,
            c0: schedule.c0,
            gamma_c: schedule.gamma_c,
            alpha: schedule.alpha,
            s0: None,
            epsilon: None,
            t_end: 1.0,
            integrator: IntegratorOptions::default(),
            oracle_tol: 1e-10,
            seed: 1,
            waypoints: 5,
            degree: 30,
            t_int: 0.5,
            gamma_switch: 20.0,
            radius: 0.05,
            fit_start: 0.05,
            fit_end: 0.45,
            out: None,
        };
        match scenario {
            ScenarioKind::Switching => {}
            ScenarioKind::TwoAgent => cfg.sigma = 50.0,
            ScenarioKind::Equality => {
                cfg.sigma = 5.0;
                cfg.t_end = 3.0;
                cfg.fit_end = 2.5;
            }
        }
        cfg
    }

    pub fn schedule(&self) -> ScheduleParams {
        ScheduleParams {
            c0: self.c0,
            gamma_c: self.gamma_c,
            s0: self.s0.unwrap_or(0.0),
            alpha: self.alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be positive, got {v}")))
            }
        };
        positive("sigma", self.sigma)?;
        positive("radius", self.radius)?;
        positive("gamma_switch", self.gamma_switch)?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if !(self.oracle_tol > 0.0 && self.oracle_tol <= 1e-2) {
            return Err(Error::InvalidInput(format!(
                "oracle_tol must lie in (0, 1e-2], got {}",
                self.oracle_tol
            )));
        }
        if let Some(eps) = self.epsilon {
            positive("epsilon", eps)?;
        }
        if self.waypoints == 0 {
            return Err(Error::InvalidInput("waypoints must be at least 1".into()));
        }
        if self.degree < self.waypoints + 2 {
            return Err(Error::InvalidInput(format!(
                "degree {} cannot interpolate {} waypoints",
                self.degree,
                self.waypoints + 2
            )));
        }
        if !self.t_int.is_finite() {
            return Err(Error::InvalidInput("t_int must be finite".into()));
        }
        if !(self.fit_start.is_finite() && self.fit_end.is_finite() && self.fit_start < self.fit_end) {
            return Err(Error::InvalidInput("fit window must satisfy fit_start < fit_end".into()));
        }
        self.schedule().validate()?;
        self.integrator.validate()
    }

    /// Parses `key = value` lines; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("line {}: expected key = value", lineno + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let kind = match pairs.iter().find(|(k, _)| k == "scenario") {
            Some((_, v)) => v.parse()?,
            None => ScenarioKind::Switching,
        };
        let mut cfg = Self::new(kind);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Sets one key from its text form, as used by config files and flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidInput(format!("{key}: cannot parse '{v}'")))
        }
        fn auto(key: &str, v: &str) -> Result<Option<f64>> {
            if v == "auto" {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        match key {
            "scenario" => self.scenario = value.parse()?,
            "sigma" => self.sigma = num(key, value)?,
            "c0" => self.c0 = num(key, value)?,
            "gamma_c" => self.gamma_c = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "s0" => self.s0 = auto(key, value)?,
            "epsilon" => self.epsilon = auto(key, value)?,
            "t_end" => self.t_end = num(key, value)?,
            "max_step" => self.integrator.max_step = num(key, value)?,
            "min_step" => self.integrator.min_step = num(key, value)?,
            "shrink" => self.integrator.shrink = num(key, value)?,
            "sample_interval" => self.integrator.sample_interval = num(key, value)?,
            "oracle_tol" => self.oracle_tol = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "waypoints" => self.waypoints = num(key, value)?,
            "degree" => self.degree = num(key, value)?,
            "t_int" => self.t_int = num(key, value)?,
            "gamma_switch" => self.gamma_switch = num(key, value)?,
            "radius" => self.radius = num(key, value)?,
            "fit_start" => self.fit_start = num(key, value)?,
            "fit_end" => self.fit_end = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(Error::InvalidInput(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Inverse of [`RunConfig::parse`]; floats use shortest round-trip form.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |x| format!("{x:?}"));
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("scenario", self.scenario.to_string());
        put("sigma", format!("{:?}", self.sigma));
        put("c0", format!("{:?}", self.c0));
        put("gamma_c", format!("{:?}", self.gamma_c));
        put("alpha", format!("{:?}", self.alpha));
        put("s0", opt(self.s0));
        put("epsilon", opt(self.epsilon));
        put("t_end", format!("{:?}", self.t_end));
        put("max_step", format!("{:?}", self.integrator.max_step));
        put("min_step", format!("{:?}", self.integrator.min_step));
        put("shrink", format!("{:?}", self.integrator.shrink));
        put("sample_interval", format!("{:?}", self.integrator.sample_interval));
        put("oracle_tol", format!("{:?}", self.oracle_tol));
        put("seed", self.seed.to_string());
        put("waypoints", self.waypoints.to_string());
        put("degree", self.degree.to_string());
        put("t_int", format!("{:?}", self.t_int));
        put("gamma_switch", format!("{:?}", self.gamma_switch));
        put("radius", format!("{:?}", self.radius));
        put("fit_start", format!("{:?}", self.fit_start));
        put("fit_end", format!("{:?}", self.fit_end));
        if let Some(out) = &self.out {
            put("out", out.display().to_string());
        }
        s
    }
}

/// A scenario instantiated from a config.
pub struct Setup {
    pub problem: TrackingProblem,
    /// Flow state at `t = 0` (stacked with multipliers for equality runs).
    pub initial: Vec<f64>,
    /// Barrier for constrained runs, with its resolved initial slack.
    pub barrier: Option<BarrierField>,
}

/// `min ‖x‖²` s.t. `x₁ + x₂ = 2 + t`.
pub fn equality_problem() -> TrackingProblem {
    let objective: FieldRef = Arc::new(QuadraticField::moving_target(&[0.0, 0.0], &[0.0, 0.0]));
    let eq = AffineEquality::new(
        DenseMatrix::from_rows(&[[1.0, 1.0]]),
        DenseMatrix::zeros(1, 2),
        vec![2.0],
        vec![1.0],
    )
    .expect("consistent shapes");
    TrackingProblem::new(objective, 2.0)
        .and_then(|p| p.with_equality(Arc::new(eq)))
        .expect("valid problem")
}

pub fn build_setup(cfg: &RunConfig) -> Result<Setup> {
    cfg.validate()?;
    match cfg.scenario {
        ScenarioKind::Switching => {
            let paths = scenario::target_paths(cfg.seed, cfg.waypoints, cfg.degree)?;
            let problem = scenario::switching_objective(paths, cfg.t_int, cfg.gamma_switch)?;
            Ok(Setup {
                initial: vec![0.0; problem.dim()],
                problem,
                barrier: None,
            })
        }
        ScenarioKind::TwoAgent => {
            let paths = scenario::target_paths(cfg.seed, cfg.waypoints, cfg.degree)?;
            let problem = scenario::two_agent_problem(paths, cfg.radius)?;
            let initial = vec![0.0; problem.dim()];
            let s0 = match cfg.s0 {
                Some(s0) => s0,
                None => schedule::initial_slack(&problem, &initial, cfg.epsilon)?,
            };
            let barrier = BarrierField::new(problem.clone(), cfg.schedule().with_s0(s0))?;
            Ok(Setup {
                problem,
                initial,
                barrier: Some(barrier),
            })
        }
        ScenarioKind::Equality => {
            let problem = equality_problem();
            Ok(Setup {
                initial: vec![0.0; 3],
                problem,
                barrier: None,
            })
        }
    }
}

/// One sampled record of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSample {
    pub t: f64,
    /// Flow state; `(x, λ)` for equality runs.
    pub state: Vec<f64>,
    /// Oracle optimum matching `state`.
    pub reference: Vec<f64>,
    pub lambda_star: Vec<f64>,
    /// Optimum of the slack-perturbed problem (constrained runs).
    pub perturbed: Option<Vec<f64>>,
    /// Minimizer of the perturbed barrier (constrained runs).
    pub barrier_minimizer: Option<Vec<f64>>,
    /// `‖state − reference‖`
    pub error: f64,
    /// Norm of the gradient of the field driving the flow.
    pub grad_norm: f64,
    /// Inequality values `fᵢ(x,t)`, or equality residuals `A(t)x − b(t)`.
    pub constraints: Vec<f64>,
    pub bounds: BoundReport,
    pub steps: usize,
    pub rejects: usize,
}

/// `‖x(t) − x*(t)‖ ≤ factor·(2/m)·‖∇f₀(x₀,0)‖·e^{−σt}`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingBound {
    pub modulus: f64,
    pub initial_gradient_norm: f64,
    pub rate: f64,
    pub factor: f64,
}

impl TrackingBound {
    pub fn at(&self, t: f64) -> f64 {
        self.factor * 2.0 / self.modulus * self.initial_gradient_norm * (-self.rate * t).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub scenario: ScenarioKind,
    pub sigma: f64,
    pub fit_window: (f64, f64),
    pub samples: Vec<RunSample>,
    /// Present for unconstrained runs.
    pub tracking: Option<TrackingBound>,
    pub regularizations: usize,
}

impl RunTrace {
    pub fn state_dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.state.len())
    }

    pub fn num_constraints(&self) -> usize {
        self.samples.first().map_or(0, |s| s.constraints.len())
    }
}

fn zero_bounds() -> BoundReport {
    BoundReport {
        perturbation_gap: 0.0,
        perturbation_bound: 0.0,
        barrier_gap: 0.0,
        barrier_bound: 0.0,
    }
}

fn at_sample(t: f64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::AtSample { .. } | Error::StepCollapse { .. } => e,
        other => Error::AtSample {
            t,
            source: Box::new(other),
        },
    }
}

/// Integrates the configured scenario, evaluates the oracle at each sample
/// and writes the CSV when `cfg.out` is set.
pub fn run_scenario(cfg: &RunConfig) -> Result<RunTrace> {
    let setup = build_setup(cfg)?;
    let trace = run_setup(cfg, &setup)?;
    if let Some(out) = &cfg.out {
        emit_csv(&trace, out)?;
    }
    Ok(trace)
}

/// As [`run_scenario`] on a prebuilt setup, without writing output.
pub fn run_setup(cfg: &RunConfig, setup: &Setup) -> Result<RunTrace> {
    let problem = &setup.problem;
    let tol = cfg.oracle_tol;
    let dim = setup.initial.len();
    let gain = GainMatrix::scaled_identity(dim, cfg.sigma)?;
    let state0 = FlowState::new(0.0, setup.initial.clone());

    let mut samples = Vec::new();
    let mut tracking = None;
    let regularizations;
    match cfg.scenario {
        ScenarioKind::Switching => {
            let flow = flow::unconstrained_flow(problem, gain)?;
            let traj = integrate(&flow, state0, cfg.t_end, &cfg.integrator, |_| Ok(()))?;
            regularizations = 0;
            let f0 = &*problem.objective;
            tracking = Some(TrackingBound {
                modulus: problem.strong_convexity,
                initial_gradient_norm: linalg::norm(&f0.gradient(&setup.initial, 0.0)?),
                rate: cfg.sigma,
                factor: 1.1,
            });
            let mut warm = setup.initial.clone();
            for st in &traj.samples {
                let t = st.t;
                let sol = oracle::static_minimize_unconstrained(f0, t, &warm, tol).map_err(at_sample(t))?;
                warm.clone_from(&sol.x_star);
                samples.push(RunSample {
                    t,
                    error: linalg::distance(&st.z, &sol.x_star),
                    grad_norm: linalg::norm(&f0.gradient(&st.z, t)?),
                    state: st.z.clone(),
                    reference: sol.x_star,
                    lambda_star: Vec::new(),
                    perturbed: None,
                    barrier_minimizer: None,
                    constraints: Vec::new(),
                    bounds: zero_bounds(),
                    steps: st.step_count,
                    rejects: st.reject_count,
                });
            }
        }
        ScenarioKind::TwoAgent => {
            let barrier = setup
                .barrier
                .clone()
                .ok_or_else(|| Error::InvalidInput("constrained setup without barrier".into()))?;
            let sched = *barrier.schedule();
            let flow = flow::interior_point_flow(barrier, gain)?;
            let traj = integrate(&flow, state0, cfg.t_end, &cfg.integrator, |_| Ok(()))?;
            regularizations = flow.regularization_count();
            for st in &traj.samples {
                let t = st.t;
                let snap = oracle::snapshot(problem, &sched, t, tol, Some(&st.z)).map_err(at_sample(t))?;
                samples.push(RunSample {
                    t,
                    error: linalg::distance(&st.z, &snap.exact.x_star),
                    grad_norm: linalg::norm(&flow.field().gradient(&st.z, t)?),
                    constraints: problem.constraint_values(&st.z, t)?,
                    state: st.z.clone(),
                    reference: snap.exact.x_star,
                    lambda_star: snap.exact.lambda_star,
                    perturbed: Some(snap.perturbed.x_star),
                    barrier_minimizer: Some(snap.barrier_minimizer),
                    bounds: snap.bounds,
                    steps: st.step_count,
                    rejects: st.reject_count,
                });
            }
        }
        ScenarioKind::Equality => {
            let flow = flow::equality_flow(problem, gain)?;
            let lagrangian = lagrangian_field(problem)?;
            let n = lagrangian.primal_dim();
            let traj = integrate(&flow, state0, cfg.t_end, &cfg.integrator, |_| Ok(()))?;
            regularizations = 0;
            let mut warm = setup.initial.clone();
            for st in &traj.samples {
                let t = st.t;
                let sol = oracle::static_solve_equality(problem, t, &warm, tol).map_err(at_sample(t))?;
                let mut reference = sol.x_star.clone();
                reference.extend_from_slice(&sol.lambda_star);
                warm.clone_from(&reference);
                samples.push(RunSample {
                    t,
                    error: linalg::distance(&st.z, &reference),
                    grad_norm: linalg::norm(&lagrangian.gradient(&st.z, t)?),
                    constraints: lagrangian.feasibility_residual(&st.z[..n], t),
                    state: st.z.clone(),
                    reference,
                    lambda_star: sol.lambda_star,
                    perturbed: None,
                    barrier_minimizer: None,
                    bounds: zero_bounds(),
                    steps: st.step_count,
                    rejects: st.reject_count,
                });
            }
        }
    }
    Ok(RunTrace {
        scenario: cfg.scenario,
        sigma: cfg.sigma,
        fit_window: (cfg.fit_start, cfg.fit_end),
        samples,
        tracking,
        regularizations,
    })
}

/// Least-squares slope of `log(value)` against `t`, negated, and the `r²`
/// of that fit. Needs at least 10 samples, all positive.
pub fn fit_decay_rate(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    if samples.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "decay fit needs at least 10 samples, got {}",
            samples.len()
        )));
    }
    if let Some(&(t, value)) = samples.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::NonPositiveValue { t, value });
    }
    let n = samples.len() as f64;
    let mean_t = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_y = samples.iter().map(|s| s.1.ln()).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, v) in samples {
        let (dt, dy) = (t - mean_t, v.ln() - mean_y);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(Error::InvalidInput("decay fit needs distinct sample times".into()));
    }
    let slope = sty / stt;
    let ss_res = (syy - slope * sty).max(0.0);
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok((-slope, r2))
}

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV header for a trace with `n` state entries and `p` constraint columns.
pub fn csv_header(n: usize, p: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((0..n).map(|i| format!("x_{i}")));
    cols.extend((0..n).map(|i| format!("xstar_{i}")));
    cols.push("err".into());
    cols.push("grad_norm".into());
    cols.extend((1..=p).map(|i| format!("f_{i}")));
    for c in ["pert_gap", "pert_bound", "barrier_gap", "barrier_bound", "steps", "rejects"] {
        cols.push(c.into());
    }
    cols.join(",")
}

/// The CSV text of a trace: header row, then one row per sample.
pub fn csv_string(trace: &RunTrace) -> String {
    let mut out = csv_header(trace.state_dim(), trace.num_constraints());
    out.push('\n');
    for s in &trace.samples {
        let mut row: Vec<String> = vec![fmt_num(s.t)];
        row.extend(s.state.iter().map(|&v| fmt_num(v)));
        row.extend(s.reference.iter().map(|&v| fmt_num(v)));
        row.push(fmt_num(s.error));
        row.push(fmt_num(s.grad_norm));
        row.extend(s.constraints.iter().map(|&v| fmt_num(v)));
        let b = &s.bounds;
        for v in [b.perturbation_gap, b.perturbation_bound, b.barrier_gap, b.barrier_bound] {
            row.push(fmt_num(v));
        }
        row.push(s.steps.to_string());
        row.push(s.rejects.to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_csv(trace: &RunTrace, path: &Path) -> Result<()> {
    fs::write(path, csv_string(trace))?;
    Ok(())
}

/// Parses CSV text written by [`emit_csv`] back into samples. Fields that
/// are not exported (multipliers, perturbed and barrier optima) come back
/// empty.
pub fn parse_csv(text: &str) -> Result<Vec<RunSample>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty CSV".into()))?
        .split(',')
        .collect();
    let n = header.iter().filter(|h| h.starts_with("x_")).count();
    let p = header.iter().filter(|h| h.starts_with("f_")).count();
    if header.len() != 2 * n + p + 9 || csv_header(n, p) != header.join(",") {
        return Err(Error::InvalidInput("unrecognized CSV header".into()));
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(Error::InvalidInput(format!("row {} has {} cells", i + 1, cells.len())));
        }
        let f = |j: usize| -> Result<f64> {
            cells[j]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("row {}: bad number '{}'", i + 1, cells[j])))
        };
        let u = |j: usize| -> Result<usize> {
            cells[j]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("row {}: bad count '{}'", i + 1, cells[j])))
        };
        let nums = |from: usize, len: usize| (from..from + len).map(f).collect::<Result<Vec<_>>>();
        let base = 1 + 2 * n;
        samples.push(RunSample {
            t: f(0)?,
            state: nums(1, n)?,
            reference: nums(1 + n, n)?,
            lambda_star: Vec::new(),
            perturbed: None,
            barrier_minimizer: None,
            error: f(base)?,
            grad_norm: f(base + 1)?,
            constraints: nums(base + 2, p)?,
            bounds: BoundReport {
                perturbation_gap: f(base + 2 + p)?,
                perturbation_bound: f(base + 3 + p)?,
                barrier_gap: f(base + 4 + p)?,
                barrier_bound: f(base + 5 + p)?,
            },
            steps: u(base + 6 + p)?,
            rejects: u(base + 7 + p)?,
        });
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub scenario: ScenarioKind,
    pub sigma: f64,
    pub samples: usize,
    pub final_time: f64,
    pub final_error: f64,
    /// `(rate, r²)` of the tracking error over the fit window.
    pub error_rate: Option<(f64, f64)>,
    /// `(rate, r²)` of the gradient norm over the fit window.
    pub gradient_rate: Option<(f64, f64)>,
    /// Largest excursion of a gap outside `[0, bound]`.
    pub max_bound_violation: f64,
    pub bound_failures: usize,
    /// Samples whose error exceeds the tracking bound (unconstrained runs).
    pub tracking_failures: usize,
    pub steps: usize,
    pub rejects: usize,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.bound_failures == 0 && self.tracking_failures == 0
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn table_header() -> String {
        format!(
            "{:<10} {:>8} {:>12} {:>12} {:>10} {:>12} {:>10} {:>8} {:>8} {:>6}",
            "scenario", "sigma", "final_err", "grad_rate", "grad_r2", "max_viol", "failures", "steps", "rejects",
            "status"
        )
    }

    pub fn table_row(&self) -> String {
        let (rate, r2) = self.gradient_rate.map_or(("-".into(), "-".into()), |(r, q)| {
            (format!("{r:.4}"), format!("{q:.6}"))
        });
        format!(
            "{:<10} {:>8} {:>12.4e} {:>12} {:>10} {:>12.3e} {:>10} {:>8} {:>8} {:>6}",
            self.scenario.name(),
            self.sigma,
            self.final_error,
            rate,
            r2,
            self.max_bound_violation,
            self.bound_failures + self.tracking_failures,
            self.steps,
            self.rejects,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rate = |r: Option<(f64, f64)>| {
            r.map_or_else(|| "n/a".to_string(), |(k, q)| format!("{k:.6} (r² = {q:.6})"))
        };
        writeln!(f, "scenario            {}", self.scenario)?;
        writeln!(f, "sigma               {}", self.sigma)?;
        writeln!(f, "samples             {}", self.samples)?;
        writeln!(f, "final time          {}", self.final_time)?;
        writeln!(f, "final error         {:.6e}", self.final_error)?;
        writeln!(f, "error decay rate    {}", rate(self.error_rate))?;
        writeln!(f, "gradient decay rate {}", rate(self.gradient_rate))?;
        writeln!(f, "max bound violation {:.3e}", self.max_bound_violation)?;
        writeln!(f, "bound failures      {}", self.bound_failures)?;
        writeln!(f, "tracking failures   {}", self.tracking_failures)?;
        writeln!(f, "steps / rejects     {} / {}", self.steps, self.rejects)?;
        write!(f, "status              {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Summary statistics of a trace; the pass flag depends only on the numeric
/// fields of the samples and the tracking bound.
pub fn emit_summary(trace: &RunTrace) -> Summary {
    let (lo, hi) = trace.fit_window;
    let window = |pick: fn(&RunSample) -> f64| {
        let pts: Vec<(f64, f64)> = trace
            .samples
            .iter()
            .filter(|s| s.t >= lo - 1e-12 && s.t <= hi + 1e-12)
            .map(|s| (s.t, pick(s)))
            .collect();
        fit_decay_rate(&pts).ok()
    };
    let last = trace.samples.last();
    Summary {
        scenario: trace.scenario,
        sigma: trace.sigma,
        samples: trace.samples.len(),
        final_time: last.map_or(0.0, |s| s.t),
        final_error: last.map_or(0.0, |s| s.error),
        error_rate: window(|s| s.error),
        gradient_rate: window(|s| s.grad_norm),
        max_bound_violation: trace
            .samples
            .iter()
            .map(|s| s.bounds.max_violation())
            .fold(0.0, f64::max),
        bound_failures: trace.samples.iter().filter(|s| !s.bounds.satisfied()).count(),
        tracking_failures: trace.tracking.map_or(0, |b| {
            trace.samples.iter().filter(|s| !(s.error <= b.at(s.t))).count()
        }),
        steps: last.map_or(0, |s| s.steps),
        rejects: last.map_or(0, |s| s.rejects),
    }
}

/// Finite-difference checks of every field in the configured scenario at
/// `count` seeded random points, labelled by field.
pub fn validate_scenario(cfg: &RunConfig, count: usize) -> Result<Vec<(String, DerivativeReport)>> {
    let setup = build_setup(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let horizon = cfg.t_end.max(1e-3);
    let mut reports = Vec::new();
    let mut check = |label: String, field: &dyn TimeVaryingField, x: &[f64], t: f64| {
        let h = 1e-6 * (1.0 + linalg::norm(x));
        reports.push((label, validate_derivatives(field, x, t, h, 1e-5)));
    };
    match cfg.scenario {
        ScenarioKind::Switching => {
            for _ in 0..count {
                let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.5..1.5)).collect();
                let t = rng.gen_range(0.0..horizon);
                check("objective".into(), &*setup.problem.objective, &x, t);
            }
        }
        ScenarioKind::TwoAgent => {
            let barrier = setup.barrier.as_ref().expect("constrained setup");
            for _ in 0..count {
                let t = rng.gen_range(0.0..horizon);
                let x = disk_point(&setup.problem, cfg.radius, t, &mut rng)?;
                check("objective".into(), &*setup.problem.objective, &x, t);
                for (i, c) in setup.problem.constraints.iter().enumerate() {
                    check(format!("constraint_{}", i + 1), &**c, &x, t);
                }
                check("barrier".into(), barrier, &x, t);
            }
        }
        ScenarioKind::Equality => {
            let lagrangian = lagrangian_field(&setup.problem)?;
            for _ in 0..count {
                let z: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let t = rng.gen_range(0.0..horizon);
                check("objective".into(), &*setup.problem.objective, &z[..2], t);
                check("lagrangian".into(), &lagrangian, &z, t);
            }
        }
    }
    Ok(reports)
}

/// A point with each agent uniformly inside `0.9·r` of its target at `t`.
pub fn disk_point(problem: &TrackingProblem, r: f64, t: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let mut x = vec![0.0; 4];
    for (i, c) in problem.constraints.iter().enumerate().take(2) {
        // fᵢ's gradient at the origin points away from the target: y = −∇fᵢ(0)/2
        let g = c.gradient(&[0.0; 4], t)?;
        let rho = 0.9 * r * rng.gen::<f64>().sqrt();
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        x[2 * i] = -0.5 * g[2 * i] + rho * phi.cos();
        x[2 * i + 1] = -0.5 * g[2 * i + 1] + rho * phi.sin();
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_fit() {
        let pts: Vec<(f64, f64)> = (0..=20).map(|i| i as f64 / 20.0).map(|t| (t, (-2.0 * t).exp())).collect();
        let (rate, r2) = fit_decay_rate(&pts).unwrap();
        assert!((rate - 2.0).abs() < 1e-9);
        assert!((r2 - 1.0).abs() < 1e-12);
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(t, _)| (t, 5.0 * (-10.0 * t).exp())).collect();
        assert!((fit_decay_rate(&scaled).unwrap().0 - 10.0).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_bad_samples() {
        let mut pts: Vec<(f64, f64)> = (0..12).map(|i| (i as f64, 1.0)).collect();
        pts[4].1 = 0.0;
        assert!(matches!(fit_decay_rate(&pts), Err(Error::NonPositiveValue { .. })));
        assert!(fit_decay_rate(&pts[..5]).is_err());
    }

    #[test]
    fn config_text_round_trip() {
        let mut cfg = RunConfig::new(ScenarioKind::TwoAgent);
        cfg.s0 = Some(0.25);
        cfg.seed = 42;
        cfg.integrator.max_step = 0.003;
        cfg.out = Some(PathBuf::from("/tmp/trace.csv"));
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn config_rejects_unknown_and_out_of_range() {
        assert!(RunConfig::parse("scenario = switching\nbogus = 1\n").is_err());
        assert!(RunConfig::parse("scenario = nowhere\n").is_err());
        assert!(RunConfig::parse("sigma = -1\n").is_err());
        assert!(RunConfig::parse("degree = 3\n").is_err());
        let cfg = RunConfig::parse("# comment\nscenario = equality  # inline\nt_end = 0.5\n").unwrap();
        assert_eq!(cfg.scenario, ScenarioKind::Equality);
        assert_eq!(cfg.t_end, 0.5);
        assert_eq!(cfg.sigma, 5.0);
    }

    #[test]
    fn zero_length_run_has_one_sample() {
        let mut cfg = RunConfig::new(ScenarioKind::Switching);
        cfg.t_end = 0.0;
        cfg.degree = 10;
        let trace = run_scenario(&cfg).unwrap();
        assert_eq!(trace.samples.len(), 1);
        assert_eq!(trace.samples[0].t, 0.0);
    }

    #[test]
    fn equality_run_has_expected_shape() {
        let mut cfg = RunConfig::new(ScenarioKind::Equality);
        cfg.t_end = 0.1;
        let trace = run_scenario(&cfg).unwrap();
        assert_eq!(trace.samples.len(), 21);
        assert_eq!(trace.state_dim(), 3);
        assert_eq!(trace.num_constraints(), 1);
        assert!((trace.samples[0].constraints[0] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip_and_schema() {
        let mut cfg = RunConfig::new(ScenarioKind::Switching);
        cfg.t_end = 0.1;
        cfg.degree = 10;
        let trace = run_scenario(&cfg).unwrap();
        let text = csv_string(&trace);
        assert!(text.lines().next().unwrap().starts_with("t,x_0,x_1,xstar_0,xstar_1,err,grad_norm,pert_gap"));
        assert!(!text.contains('\r'));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back.len(), trace.samples.len());
        for (a, b) in back.iter().zip(&trace.samples) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            assert_eq!(a.state, b.state);
            assert_eq!(a.reference, b.reference);
            assert_eq!(a.error.to_bits(), b.error.to_bits());
            assert_eq!(a.grad_norm.to_bits(), b.grad_norm.to_bits());
            assert_eq!(a.bounds, b.bounds);
            assert_eq!((a.steps, a.rejects), (b.steps, b.rejects));
        }
    }

    #[test]
    fn tampered_trace_fails_summary() {
        let mut cfg = RunConfig::new(ScenarioKind::Equality);
        cfg.t_end = 0.2;
        let mut trace = run_scenario(&cfg).unwrap();
        assert_eq!(emit_summary(&trace).exit_code(), 0);
        trace.samples[3].bounds.barrier_gap = 1.0;
        let s = emit_summary(&trace);
        assert_eq!(s.exit_code(), 1);
        assert_eq!(s.bound_failures, 1);
        assert!(s.to_string().contains("FAIL"));
    }
}
