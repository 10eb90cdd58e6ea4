//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tvipm_core::harness::{self, csv_string, emit_summary, fit_decay_rate, run_scenario, validate_scenario};
use tvipm_core::oracle::{self, BOUND_SLACK};
use tvipm_core::scenario::{fit_min_acceleration_path, generate_waypoints, WaypointSet};
use tvipm_core::{
    BarrierField, DenseMatrix, FieldRef, QuadraticField, RunConfig, ScenarioKind, ScheduleParams,
    TimeVaryingField, TrackingProblem,
};

/// Waypoint seed shared by every scenario criterion.
const SEED: u64 = 15;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    format!("error: {e}")
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn switching_config() -> RunConfig {
    let mut cfg = RunConfig::new(ScenarioKind::Switching);
    cfg.seed = SEED;
    cfg.sigma = 10.0;
    cfg.t_end = 0.5;
    cfg.integrator.max_step = 1e-3;
    cfg
}

fn two_agent_config() -> RunConfig {
    let mut cfg = RunConfig::new(ScenarioKind::TwoAgent);
    cfg.seed = SEED;
    cfg.sigma = 50.0;
    cfg.radius = 0.05;
    cfg.c0 = 1.0;
    cfg.gamma_c = 6.0;
    cfg.alpha = 10.0;
    cfg.t_end = 1.0;
    cfg.integrator.max_step = 0.01;
    cfg.integrator.sample_interval = 0.005;
    cfg
}

fn gradient_decay() -> Outcome {
    let start = Instant::now();
    let trace = run_scenario(&switching_config()).map_err(err)?;
    let elapsed = start.elapsed();
    let pts: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter(|s| s.t >= 0.05 - 1e-12 && s.t <= 0.45 + 1e-12)
        .map(|s| (s.t, s.grad_norm))
        .collect();
    let (rate, r2) = fit_decay_rate(&pts).map_err(err)?;
    check(
        (rate - 10.0).abs() <= 0.5 && r2 >= 0.999 && elapsed < Duration::from_secs(5),
        format!("rate {rate:.4} (target 10 ± 5%), r² {r2:.5}, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn tracking_bound() -> Outcome {
    let cfg = switching_config();
    let setup = harness::build_setup(&cfg).map_err(err)?;
    let trace = harness::run_setup(&cfg, &setup).map_err(err)?;
    let f0 = &setup.problem.objective;
    let g0 = norm(&f0.gradient(&setup.initial, 0.0).map_err(err)?);
    let mut worst = f64::NEG_INFINITY;
    let mut warm = setup.initial.clone();
    for s in &trace.samples {
        let x_star = oracle::static_minimize_unconstrained(&**f0, s.t, &warm, 1e-10)
            .map_err(err)?
            .x_star;
        let bound = 1.1 * (2.0 / 2.0) * g0 * (-10.0 * s.t).exp();
        worst = worst.max(dist(&s.state, &x_star) / bound);
        warm = x_star;
    }
    check(
        worst <= 1.0,
        format!("max error/bound {worst:.4} over {} samples", trace.samples.len()),
    )
}

fn equality_flow() -> Outcome {
    let mut cfg = RunConfig::new(ScenarioKind::Equality);
    cfg.sigma = 5.0;
    cfg.t_end = 3.0;
    let trace = run_scenario(&cfg).map_err(err)?;
    let pts: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter(|s| s.t >= 0.05 - 1e-12 && s.t <= 2.5 + 1e-12)
        .map(|s| (s.t, s.constraints[0].abs()))
        .collect();
    let (rate, r2) = fit_decay_rate(&pts).map_err(err)?;
    let last = trace.samples.last().ok_or("empty trace")?;
    let b = 2.0 + last.t;
    let z_star = [b / 2.0, b / 2.0, -b];
    let final_err = dist(&last.state, &z_star);
    check(
        (rate - 5.0).abs() <= 0.25 && final_err <= 1e-3,
        format!("feasibility rate {rate:.4} (r² {r2:.5}), final ‖z − z*‖ {final_err:.2e}"),
    )
}

/// `min x² s.t. x + 1 ≤ 0`
fn scalar_instance() -> TrackingProblem {
    let obj: FieldRef = Arc::new(QuadraticField::moving_target(&[0.0], &[0.0]));
    let con: FieldRef = Arc::new(QuadraticField::affine(vec![1.0], 1.0));
    TrackingProblem::new(obj, 2.0).unwrap().with_constraints(vec![con]).unwrap()
}

/// Root of `2x − 1/(c(x + 1)) = 0` on `(−2, −1)`.
fn bisect_barrier(c: f64) -> f64 {
    let g = |x: f64| 2.0 * x - 1.0 / (c * (x + 1.0));
    let (mut lo, mut hi) = (-2.0, -1.0 - 1e-300);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn barrier_bound() -> Outcome {
    let problem = scalar_instance();
    let mut lines = Vec::new();
    let mut ok = true;
    for c in [10.0, 100.0, 1000.0] {
        let sched = ScheduleParams::new(c, 0.0, 0.0, 1.0).map_err(err)?;
        let barrier = BarrierField::new(problem.clone(), sched).map_err(err)?;
        let z = oracle::static_barrier_minimizer(&barrier, 0.0, 1e-12, None).map_err(err)?[0];
        let x = oracle::static_solve_constrained(&problem, 0.0, 1e-10).map_err(err)?.x_star[0];
        let reference = bisect_barrier(c);
        let gap = z * z - x * x;
        let good = (z - reference).abs() <= 1e-10 && gap >= 0.0 && gap <= 1.0 / c;
        ok &= good;
        lines.push(format!("c={c}: gap {gap:.3e} ≤ {:.0e}, |z̃*−bisect| {:.1e}", 1.0 / c, (z - reference).abs()));
    }
    check(ok, lines.join("; "))
}

fn perturbation_bound() -> Outcome {
    let problem = scalar_instance();
    let exact = oracle::static_solve_constrained(&problem, 0.0, 1e-10).map_err(err)?;
    let lambda = 2.0;
    let mut lines = Vec::new();
    let mut ok = (exact.lambda_star[0] - lambda).abs() <= 1e-6;
    for s in [0.5, 0.1, 0.0] {
        let pert = oracle::static_solve_perturbed(&problem, 0.0, s, 1e-10).map_err(err)?;
        let gap = exact.objective_value - pert.objective_value;
        let good = if s == 0.0 {
            gap == 0.0
        } else {
            gap >= -BOUND_SLACK && gap <= lambda * s + BOUND_SLACK
        };
        ok &= good;
        lines.push(format!("s={s}: gap {gap:.6} ≤ {:.2}", lambda * s));
    }
    check(ok, format!("λ* {:.8}; {}", exact.lambda_star[0], lines.join("; ")))
}

fn two_agent() -> Outcome {
    let start = Instant::now();
    let trace = run_scenario(&two_agent_config()).map_err(err)?;
    let elapsed = start.elapsed();
    let late_max = trace
        .samples
        .iter()
        .filter(|s| s.t >= 0.8 - 1e-12)
        .flat_map(|s| s.constraints.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    let e01 = trace
        .samples
        .iter()
        .find(|s| (s.t - 0.1).abs() < 1e-9)
        .ok_or("no sample at t = 0.1")?
        .error;
    let last = trace.samples.last().ok_or("empty trace")?;
    let ratio = last.error / e01;
    check(
        late_max <= 1e-2 && (last.t - 1.0).abs() < 1e-12 && ratio <= 0.1 && elapsed < Duration::from_secs(60),
        format!(
            "max fᵢ after 0.8: {late_max:.3e}; error(1)/error(0.1) {ratio:.4}; {} samples in {:.2}s",
            trace.samples.len(),
            elapsed.as_secs_f64()
        ),
    )
}

/// Minimum of `Σ w (second difference)²` over grid values with the waypoint
/// values pinned: a discretized version of the acceleration energy.
fn grid_energy(w: &WaypointSet, d: usize, points: usize) -> f64 {
    let horizon = w.horizon();
    let mut ts: Vec<f64> = (0..points).map(|i| horizon * i as f64 / (points - 1) as f64).collect();
    ts.extend(w.times.iter().copied());
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let n = ts.len();
    let pinned: Vec<Option<f64>> = ts
        .iter()
        .map(|t| w.times.iter().position(|s| (s - t).abs() < 1e-12).map(|l| w.points[l][d]))
        .collect();
    let mut col = vec![usize::MAX; n];
    let mut free = 0;
    for i in 0..n {
        if pinned[i].is_none() {
            col[i] = free;
            free += 1;
        }
    }
    let mut a = DMatrix::<f64>::zeros(n - 2, free);
    let mut b = DVector::<f64>::zeros(n - 2);
    for r in 0..n - 2 {
        let (h0, h1) = (ts[r + 1] - ts[r], ts[r + 2] - ts[r + 1]);
        let weight = ((h0 + h1) / 2.0).sqrt();
        let stencil = [2.0 / (h0 * (h0 + h1)), -2.0 / (h0 * h1), 2.0 / (h1 * (h0 + h1))];
        for (k, c) in stencil.iter().enumerate() {
            match pinned[r + k] {
                Some(v) => b[r] -= weight * c * v,
                None => a[(r, col[r + k])] += weight * c,
            }
        }
    }
    let x = a.clone().svd(true, true).solve(&b, 1e-14).unwrap();
    (a * x - b).norm_squared()
}

fn path_fit() -> Outcome {
    let w = generate_waypoints(SEED, 5, 2).map_err(err)?;
    let path = fit_min_acceleration_path(&w, 30).map_err(err)?;
    let residual = path.max_waypoint_residual(&w);
    let energy = path.acceleration_energy();
    let reference = grid_energy(&w, 0, 200) + grid_energy(&w, 1, 200);
    let rel = (energy - reference).abs() / reference;
    check(
        residual <= 1e-6 && rel <= 0.01,
        format!("residual {residual:.2e}, energy {energy:.3} vs grid {reference:.3} ({:.3}%)", 100.0 * rel),
    )
}

fn derivative_integrity() -> Outcome {
    let mut reports = Vec::new();
    for scenario in [ScenarioKind::Switching, ScenarioKind::TwoAgent] {
        let mut cfg = RunConfig::new(scenario);
        cfg.seed = SEED;
        for (label, r) in validate_scenario(&cfg, 100).map_err(err)? {
            reports.push((format!("{scenario}/{label}"), r));
        }
    }
    let labels: BTreeSet<&str> = reports.iter().map(|(l, _)| l.as_str()).collect();
    let failed: Vec<_> = reports.iter().filter(|(_, r)| !r.passed()).collect();
    let worst = reports.iter().map(|(_, r)| r.max_error()).fold(0.0, f64::max);
    let counts_ok = labels.len() == 5 && reports.len() == 100 + 4 * 100;
    check(
        failed.is_empty() && counts_ok,
        format!(
            "{} checks over {:?}, {} failed, worst relative error {worst:.2e}",
            reports.len(),
            labels,
            failed.len()
        ),
    )
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> DenseMatrix {
    let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut q = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            q[(i, j)] = (0..n).map(|k| b[k][i] * b[k][j]).sum::<f64>();
        }
        q[(i, i)] += shift;
    }
    q
}

fn oracle_kkt() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0_f64;
    let mut active = 0;
    for _ in 0..50 {
        let n = rng.gen_range(1..=4);
        let p = rng.gen_range(1..=3);
        let t = rng.gen_range(0.0..1.0);
        let obj = QuadraticField::new(
            random_spd(&mut rng, n, 0.5),
            (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect(),
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            [0.0, 0.0, 0.0],
        )
        .map_err(err)?;
        let cons: Vec<FieldRef> = (0..p)
            .map(|_| {
                let q = if rng.gen_bool(0.5) { random_spd(&mut rng, n, 0.0) } else { DenseMatrix::zeros(n, n) };
                let g0 = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let g1 = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
                let k0 = -rng.gen_range(0.2..1.0);
                Arc::new(QuadraticField::new(q, g0, g1, [k0, 0.0, 0.0]).unwrap()) as FieldRef
            })
            .collect();
        let problem = TrackingProblem::new(Arc::new(obj.clone()), 0.5)
            .map_err(err)?
            .with_constraints(cons.clone())
            .map_err(err)?;
        let sol = oracle::static_solve_constrained(&problem, t, 1e-10).map_err(err)?;
        let (x, lam) = (&sol.x_star, &sol.lambda_star);
        let mut stat = obj.gradient(x, t).map_err(err)?;
        let mut comp = 0.0_f64;
        let mut dual = 0.0_f64;
        let mut primal = 0.0_f64;
        for (c, &l) in cons.iter().zip(lam) {
            let fi = c.value(x, t).map_err(err)?;
            for (s, gi) in stat.iter_mut().zip(c.gradient(x, t).map_err(err)?) {
                *s += l * gi;
            }
            comp = comp.max((l * fi).abs());
            dual = dual.max(-l);
            primal = primal.max(fi);
            if l > 1e-6 {
                active += 1;
            }
        }
        worst = worst.max(norm(&stat)).max(comp).max(dual).max(primal);
    }
    check(
        worst <= 1e-6,
        format!("worst KKT residual {worst:.2e} over 50 instances ({active} active constraints)"),
    )
}

fn determinism() -> Outcome {
    let mut ok = true;
    let mut sizes = Vec::new();
    for cfg in [switching_config(), two_agent_config()] {
        let a = csv_string(&run_scenario(&cfg).map_err(err)?);
        let b = csv_string(&run_scenario(&cfg).map_err(err)?);
        ok &= a.as_bytes() == b.as_bytes();
        sizes.push(a.len());
        let summary = emit_summary(&run_scenario(&cfg).map_err(err)?);
        ok &= summary.bound_failures == 0;
    }
    check(ok, format!("identical CSV bytes for both scenarios ({sizes:?} bytes)"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 gradient decay rate", gradient_decay),
        ("2 tracking error bound", tracking_bound),
        ("3 equality-constrained flow", equality_flow),
        ("4 barrier suboptimality bound", barrier_bound),
        ("5 slack perturbation bound", perturbation_bound),
        ("6 two-agent end-to-end", two_agent),
        ("7 minimum-acceleration path fit", path_fit),
        ("8 derivative integrity", derivative_integrity),
        ("9 oracle KKT conditions", oracle_kkt),
        ("10 deterministic output", determinism),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
