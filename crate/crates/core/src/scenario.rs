//! Target paths and the two reference problems: a single agent switching
//! between two moving targets, and two agents that must stay near their own
//! targets while staying close to each other.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{FieldRef, QuadraticField, TimeVaryingField, TrackingProblem};
use crate::linalg::{self, DenseMatrix, FullPivLu};

/// Waypoints `y_ℓ` at times `ℓ·t_f/(L+1)`, `ℓ = 0..L+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointSet {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl WaypointSet {
    pub fn new(times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != points.len() || times.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least two waypoints with one time each, got {} times and {} points",
                times.len(),
                points.len()
            )));
        }
        let k = points[0].len();
        if k == 0 || points.iter().any(|p| p.len() != k) {
            return Err(Error::DimensionMismatch("waypoints must share a positive dimension".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("waypoint times must be strictly increasing".into()));
        }
        Ok(Self { times, points })
    }

    /// Number of interior waypoints.
    pub fn interior_count(&self) -> usize {
        self.times.len() - 2
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// `L + 2` points drawn uniformly from `[0,1]^k`, at times `ℓ/(L+1)`.
pub fn generate_waypoints(seed: u64, l: usize, k: usize) -> Result<WaypointSet> {
    if l == 0 || k == 0 {
        return Err(Error::InvalidInput(format!(
            "need L ≥ 1 and k ≥ 1, got L = {l}, k = {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = l + 2;
    let times = (0..count).map(|i| i as f64 / (l + 1) as f64).collect();
    let points = (0..count)
        .map(|_| (0..k).map(|_| rng.gen::<f64>()).collect())
        .collect();
    WaypointSet::new(times, points)
}

/// `y_d(t) = Σⱼ c_{dj} τʲ` with `τ = t/t_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPath {
    coefficients: Vec<Vec<f64>>,
    horizon: f64,
}

impl PolynomialPath {
    pub fn new(coefficients: Vec<Vec<f64>>, horizon: f64) -> Result<Self> {
        if coefficients.is_empty() || coefficients[0].is_empty() {
            return Err(Error::InvalidInput("path needs at least one coefficient".into()));
        }
        let n = coefficients[0].len();
        if coefficients.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch("ragged path coefficients".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self {
            coefficients,
            horizon,
        })
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    /// Number of basis functions per dimension.
    pub fn degree(&self) -> usize {
        self.coefficients[0].len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    /// Compensated Horner: fitted coefficients are large and alternate in
    /// sign, so plain Horner loses most of its digits to cancellation.
    fn horner(&self, t: f64, order: usize) -> Vec<f64> {
        let tau = t / self.horizon;
        let scale = self.horizon.powi(-(order as i32));
        self.coefficients
            .iter()
            .map(|c| {
                let mut acc = 0.0;
                let mut err = 0.0;
                for j in (order..c.len()).rev() {
                    let falling: f64 = (0..order).map(|i| (j - i) as f64).product();
                    let (p, pe) = two_product(acc, tau);
                    let (sum, se) = two_sum(p, falling * c[j]);
                    acc = sum;
                    err = err * tau + (pe + se);
                }
                (acc + err) * scale
            })
            .collect()
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        self.horner(t, 0)
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        self.horner(t, 1)
    }

    pub fn acceleration(&self, t: f64) -> Vec<f64> {
        self.horner(t, 2)
    }

    /// `∫₀^{t_f} ‖ÿ(t)‖² dt` by Gauss–Legendre quadrature, exact for the
    /// polynomial degree and stable for large coefficients.
    pub fn acceleration_energy(&self) -> f64 {
        let (nodes, weights) = gauss_legendre(self.degree().max(2));
        let e: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&tau, &w)| {
                let a = self.acceleration(tau * self.horizon);
                w * linalg::dot(&a, &a)
            })
            .sum();
        e * self.horizon
    }

    /// Largest `‖y(tₗ) − waypointₗ‖∞`.
    pub fn max_waypoint_residual(&self, w: &WaypointSet) -> f64 {
        w.times
            .iter()
            .zip(&w.points)
            .flat_map(|(&t, p)| {
                self.position(t)
                    .into_iter()
                    .zip(p)
                    .map(|(a, b)| (a - b).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `H_{jk} = ∫₀¹ (τʲ)'' (τᵏ)'' dτ = j(j−1)k(k−1)/(j+k−3)` for `j, k ≥ 2`.
pub fn acceleration_gram(n: usize) -> DenseMatrix {
    let mut h = DenseMatrix::zeros(n, n);
    for j in 2..n {
        for k in 2..n {
            let (jf, kf) = (j as f64, k as f64);
            h[(j, k)] = jf * (jf - 1.0) * kf * (kf - 1.0) / (jf + kf - 3.0);
        }
    }
    h
}

/// Gauss–Legendre nodes and weights on `[0, 1]`, exact for polynomials of
/// degree `2m − 1`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p0 = 1.0;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - z);
        weights[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (nodes, weights)
}

/// Ladder of relative ridges tried, smallest first, until the KKT system
/// factors.
const FIT_RIDGES: [f64; 6] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5];

/// Per dimension, the polynomial with `degree` coefficients through the
/// waypoints that minimizes the integrated squared acceleration.
///
/// The curvature Gram matrix is used in factored form `H = VᵀV`, with `V`
/// the second derivatives of the monomials at Gauss nodes scaled by the root
/// weights. The KKT system on `(ν, c, η)`
///
/// ```text
/// [ −αI   V    0  ] [ν]   [0]
/// [  Vᵀ   αD   Aᵀ ] [c] = [0]
/// [  0    A    0  ] [η]   [b]
/// ```
///
/// is equivalent to `min cᵀ(H + α²D)c` s.t. `Ac = b` (`D` masks the
/// constant and linear terms), with conditioning in `√H` rather than `H`.
/// The monomial Gram matrix is numerically singular for large bases, so the
/// smallest ridge `α` from a fixed ladder for which the system factors is
/// used.
pub fn fit_min_acceleration_path(w: &WaypointSet, degree: usize) -> Result<PolynomialPath> {
    let q = w.times.len();
    if degree < q {
        return Err(Error::InvalidInput(format!(
            "{degree} coefficients cannot interpolate {q} waypoints"
        )));
    }
    let horizon = w.horizon();
    if !(horizon > 0.0) {
        return Err(Error::InvalidInput("waypoint horizon must be positive".into()));
    }
    let m = degree.max(2);
    let (nodes, weights) = gauss_legendre(m);
    let mut v = DenseMatrix::zeros(m, degree);
    for (i, (&tau, &wt)) in nodes.iter().zip(&weights).enumerate() {
        for j in 2..degree {
            v[(i, j)] = wt.sqrt() * (j * (j - 1)) as f64 * tau.powi(j as i32 - 2);
        }
    }
    let scale = v.max_abs().max(1.0);
    let dim = m + degree + q;
    let build = |alpha: f64| {
        let mut k = DenseMatrix::zeros(dim, dim);
        for i in 0..m {
            k[(i, i)] = -alpha;
            for j in 0..degree {
                k[(i, m + j)] = v[(i, j)];
                k[(m + j, i)] = v[(i, j)];
            }
        }
        for j in 2..degree {
            k[(m + j, m + j)] = alpha;
        }
        for (l, &t) in w.times.iter().enumerate() {
            let tau = t / horizon;
            let mut p = 1.0;
            for j in 0..degree {
                k[(m + degree + l, m + j)] = p;
                k[(m + j, m + degree + l)] = p;
                p *= tau;
            }
        }
        k
    };
    let mut factored = None;
    let mut last_err = None;
    for rel in FIT_RIDGES {
        let kkt = build(rel * scale);
        match FullPivLu::factor(&kkt) {
            Ok(lu) => {
                factored = Some((kkt, lu));
                break;
            }
            Err(e @ Error::Singular { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    let (kkt, lu) = match factored {
        Some(f) => f,
        None => return Err(last_err.expect("ladder is non-empty")),
    };
    let mut coefficients = Vec::with_capacity(w.dim());
    for d in 0..w.dim() {
        let mut rhs = vec![0.0; dim];
        for (l, p) in w.points.iter().enumerate() {
            rhs[m + degree + l] = p[d];
        }
        let mut sol = lu.solve(&rhs);
        let residual = linalg::sub(&rhs, &kkt.matvec(&sol));
        linalg::axpy(1.0, &lu.solve(&residual), &mut sol);
        coefficients.push(sol[m..m + degree].to_vec());
    }
    PolynomialPath::new(coefficients, horizon)
}

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// `S(t) = 1 − 1/(1 + e^{−γ(t − t_int)})` and its derivative.
pub fn switch_weight(t: f64, t_int: f64, gamma: f64) -> (f64, f64) {
    let sig = logistic(gamma * (t - t_int));
    (1.0 - sig, -gamma * sig * (1.0 - sig))
}

/// `f₀(x,t) = S(t)‖x − y₁(t)‖² + (1 − S(t))‖x − y₂(t)‖²`.
#[derive(Debug, Clone)]
pub struct SwitchingObjective {
    paths: [PolynomialPath; 2],
    t_int: f64,
    gamma: f64,
}

impl SwitchingObjective {
    /// The blended target `S·y₁ + (1−S)·y₂`, which is also the minimizer.
    pub fn blended_target(&self, t: f64) -> Vec<f64> {
        let (s, _) = switch_weight(t, self.t_int, self.gamma);
        let (y1, y2) = (self.paths[0].position(t), self.paths[1].position(t));
        y1.iter().zip(&y2).map(|(a, b)| s * a + (1.0 - s) * b).collect()
    }

    pub fn paths(&self) -> &[PolynomialPath; 2] {
        &self.paths
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.paths[0].dim() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} entries, expected {}",
                x.len(),
                self.paths[0].dim()
            )));
        }
        Ok(())
    }
}

impl TimeVaryingField for SwitchingObjective {
    fn dim(&self) -> usize {
        self.paths[0].dim()
    }

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        self.check(x)?;
        let (s, _) = switch_weight(t, self.t_int, self.gamma);
        let d1 = linalg::distance(x, &self.paths[0].position(t));
        let d2 = linalg::distance(x, &self.paths[1].position(t));
        Ok(s * d1 * d1 + (1.0 - s) * d2 * d2)
    }

    fn gradient(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check(x)?;
        let ybar = self.blended_target(t);
        Ok(x.iter().zip(&ybar).map(|(a, b)| 2.0 * (a - b)).collect())
    }

    fn hessian(&self, x: &[f64], _t: f64) -> Result<DenseMatrix> {
        self.check(x)?;
        Ok(DenseMatrix::scaled_identity(x.len(), 2.0))
    }

    /// `2Ṡ(y₂ − y₁) − 2(S·ẏ₁ + (1−S)·ẏ₂)`
    fn time_cross(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check(x)?;
        let (s, s_dot) = switch_weight(t, self.t_int, self.gamma);
        let (y1, y2) = (self.paths[0].position(t), self.paths[1].position(t));
        let (v1, v2) = (self.paths[0].velocity(t), self.paths[1].velocity(t));
        Ok((0..x.len())
            .map(|i| 2.0 * s_dot * (y2[i] - y1[i]) - 2.0 * (s * v1[i] + (1.0 - s) * v2[i]))
            .collect())
    }

    /// `Ṡ(‖x−y₁‖² − ‖x−y₂‖²) − 2S(x−y₁)ᵀẏ₁ − 2(1−S)(x−y₂)ᵀẏ₂`
    fn time_partial(&self, x: &[f64], t: f64) -> Result<f64> {
        self.check(x)?;
        let (s, s_dot) = switch_weight(t, self.t_int, self.gamma);
        let e1 = linalg::sub(x, &self.paths[0].position(t));
        let e2 = linalg::sub(x, &self.paths[1].position(t));
        let (v1, v2) = (self.paths[0].velocity(t), self.paths[1].velocity(t));
        Ok(s_dot * (linalg::dot(&e1, &e1) - linalg::dot(&e2, &e2))
            - 2.0 * s * linalg::dot(&e1, &v1)
            - 2.0 * (1.0 - s) * linalg::dot(&e2, &v2))
    }
}

fn check_pair(paths: &[PolynomialPath; 2]) -> Result<()> {
    if paths[0].dim() != paths[1].dim() {
        return Err(Error::DimensionMismatch("paths differ in dimension".into()));
    }
    if paths[0].horizon() != paths[1].horizon() {
        return Err(Error::InvalidInput("paths differ in horizon".into()));
    }
    Ok(())
}

pub fn switching_field(paths: [PolynomialPath; 2], t_int: f64, gamma_switch: f64) -> Result<SwitchingObjective> {
    check_pair(&paths)?;
    if !(gamma_switch > 0.0 && gamma_switch.is_finite()) || !t_int.is_finite() {
        return Err(Error::InvalidInput(format!(
            "switch needs finite t_int and positive gamma, got {t_int}, {gamma_switch}"
        )));
    }
    Ok(SwitchingObjective {
        paths,
        t_int,
        gamma: gamma_switch,
    })
}

/// The unconstrained switching problem, strongly convex with modulus 2.
pub fn switching_objective(paths: [PolynomialPath; 2], t_int: f64, gamma_switch: f64) -> Result<TrackingProblem> {
    TrackingProblem::new(Arc::new(switching_field(paths, t_int, gamma_switch)?), 2.0)
}

/// `fᵢ(x,t) = ‖x_block − y(t)‖² − r²` on one planar block of `x ∈ ℝ⁴`.
#[derive(Debug, Clone)]
pub struct DiskConstraint {
    path: PolynomialPath,
    block: usize,
    radius: f64,
}

impl DiskConstraint {
    pub fn new(path: PolynomialPath, block: usize, radius: f64) -> Result<Self> {
        if path.dim() != 2 || block > 1 {
            return Err(Error::InvalidInput("disk constraints are planar with block 0 or 1".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
        }
        Ok(Self {
            path,
            block,
            radius,
        })
    }

    fn offset(&self, x: &[f64], t: f64) -> Result<[f64; 2]> {
        if x.len() != 4 {
            return Err(Error::DimensionMismatch(format!("point has {} entries, expected 4", x.len())));
        }
        let y = self.path.position(t);
        let b = 2 * self.block;
        Ok([x[b] - y[0], x[b + 1] - y[1]])
    }
}

impl TimeVaryingField for DiskConstraint {
    fn dim(&self) -> usize {
        4
    }

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        let e = self.offset(x, t)?;
        Ok(e[0] * e[0] + e[1] * e[1] - self.radius * self.radius)
    }

    fn gradient(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let e = self.offset(x, t)?;
        let mut g = vec![0.0; 4];
        g[2 * self.block] = 2.0 * e[0];
        g[2 * self.block + 1] = 2.0 * e[1];
        Ok(g)
    }

    fn hessian(&self, x: &[f64], t: f64) -> Result<DenseMatrix> {
        self.offset(x, t)?;
        let mut h = DenseMatrix::zeros(4, 4);
        h[(2 * self.block, 2 * self.block)] = 2.0;
        h[(2 * self.block + 1, 2 * self.block + 1)] = 2.0;
        Ok(h)
    }

    fn time_cross(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.offset(x, t)?;
        let v = self.path.velocity(t);
        let mut g = vec![0.0; 4];
        g[2 * self.block] = -2.0 * v[0];
        g[2 * self.block + 1] = -2.0 * v[1];
        Ok(g)
    }

    fn time_partial(&self, x: &[f64], t: f64) -> Result<f64> {
        let e = self.offset(x, t)?;
        let v = self.path.velocity(t);
        Ok(-2.0 * (e[0] * v[0] + e[1] * v[1]))
    }
}

/// `f₀(x) = ‖x₁ − x₂‖²` on `x = (x₁, x₂) ∈ ℝ⁴`.
pub fn pair_distance_objective() -> QuadraticField {
    let mut q = DenseMatrix::zeros(4, 4);
    for i in 0..2 {
        q[(i, i)] = 2.0;
        q[(i + 2, i + 2)] = 2.0;
        q[(i, i + 2)] = -2.0;
        q[(i + 2, i)] = -2.0;
    }
    QuadraticField::stationary(q, vec![0.0; 4], 0.0).expect("symmetric by construction")
}

/// Two agents, each within `r` of its own target, minimizing their mutual
/// squared distance. The declared modulus is the smallest eigenvalue of the
/// static barrier Hessian (`c = 1`, `s = 0`) over a few points inside the
/// disks at `t = 0`.
pub fn two_agent_problem(paths: [PolynomialPath; 2], r: f64) -> Result<TrackingProblem> {
    check_pair(&paths)?;
    if paths[0].dim() != 2 {
        return Err(Error::InvalidInput("two-agent paths must be planar".into()));
    }
    let objective = pair_distance_objective();
    let disks = [
        DiskConstraint::new(paths[0].clone(), 0, r)?,
        DiskConstraint::new(paths[1].clone(), 1, r)?,
    ];
    let m = barrier_curvature(&objective, &disks, 0.0)?;
    let constraints: Vec<FieldRef> = disks.into_iter().map(|d| Arc::new(d) as FieldRef).collect();
    TrackingProblem::new(Arc::new(objective), m)?.with_constraints(constraints)
}

fn barrier_curvature(objective: &QuadraticField, disks: &[DiskConstraint; 2], t: f64) -> Result<f64> {
    let y1 = disks[0].path.position(t);
    let y2 = disks[1].path.position(t);
    let r = disks[0].radius;
    let mut least = f64::INFINITY;
    for k in 0..8 {
        let angle = std::f64::consts::FRAC_PI_4 * k as f64;
        let rho = 0.5 * r * (k % 2) as f64;
        let (dx, dy) = (rho * angle.cos(), rho * angle.sin());
        let x = [y1[0] + dx, y1[1] + dy, y2[0] - dx, y2[1] - dy];
        let mut h = objective.hessian(&x, t)?;
        for d in disks {
            let margin = -d.value(&x, t)?;
            let g = d.gradient(&x, t)?;
            h.add_outer(1.0 / (margin * margin), &g, &g);
            h.add_scaled(1.0 / margin, &d.hessian(&x, t)?);
        }
        least = least.min(linalg::min_eigenvalue(&h, 1e-10)?);
    }
    Ok(least)
}

/// Waypoints for target `i` come from seed `seed + i`.
pub fn target_paths(seed: u64, l: usize, degree: usize) -> Result<[PolynomialPath; 2]> {
    let fit = |i: u64| fit_min_acceleration_path(&generate_waypoints(seed.wrapping_add(i), l, 2)?, degree);
    Ok([fit(0)?, fit(1)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::validate_derivatives;

    fn line(a: [f64; 2], b: [f64; 2]) -> PolynomialPath {
        PolynomialPath::new(vec![vec![a[0], b[0] - a[0]], vec![a[1], b[1] - a[1]]], 1.0).unwrap()
    }

    #[test]
    fn waypoints_are_deterministic_and_in_the_box() {
        let a = generate_waypoints(7, 5, 2).unwrap();
        assert_eq!(a, generate_waypoints(7, 5, 2).unwrap());
        assert_ne!(a, generate_waypoints(8, 5, 2).unwrap());
        assert_eq!(a.points.len(), 7);
        assert_eq!(a.interior_count(), 5);
        for (i, t) in a.times.iter().enumerate() {
            assert!((t - i as f64 / 6.0).abs() < 1e-15);
        }
        assert!(a.points.iter().flatten().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(generate_waypoints(1, 0, 2).is_err());
    }

    #[test]
    fn two_waypoints_give_a_line() {
        let w = WaypointSet::new(vec![0.0, 1.0], vec![vec![0.2, 0.9], vec![0.8, 0.1]]).unwrap();
        let p = fit_min_acceleration_path(&w, 6).unwrap();
        assert!(p.acceleration_energy().abs() < 1e-12);
        assert!(p.max_waypoint_residual(&w) < 1e-12);
        let mid = p.position(0.5);
        assert!((mid[0] - 0.5).abs() < 1e-12 && (mid[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn collinear_waypoints_give_a_line() {
        let w = WaypointSet::new(
            vec![0.0, 0.5, 1.0],
            vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]],
        )
        .unwrap();
        let p = fit_min_acceleration_path(&w, 8).unwrap();
        assert!(p.acceleration_energy().abs() < 1e-10);
        assert!(p.max_waypoint_residual(&w) < 1e-12);
    }

    #[test]
    fn too_few_coefficients_is_rejected() {
        let w = generate_waypoints(3, 5, 2).unwrap();
        assert!(fit_min_acceleration_path(&w, 6).is_err());
    }

    #[test]
    fn quadrature_is_exact_for_its_degree() {
        let (x, w) = gauss_legendre(6);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // ∫₀¹ τ¹¹ = 1/12
        let v: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(11)).sum();
        assert!((v - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn energy_matches_gram_form() {
        let p = PolynomialPath::new(vec![vec![0.3, -1.0, 2.0, 0.5, -0.25], vec![1.0, 0.0, -0.7, 0.2, 3.0]], 2.0).unwrap();
        let h = acceleration_gram(5);
        let closed: f64 = p.coefficients().iter().map(|c| linalg::dot(c, &h.matvec(c))).sum::<f64>() / 8.0;
        assert!((p.acceleration_energy() - closed).abs() < 1e-12 * closed);
    }

    #[test]
    fn degenerate_times_are_singular() {
        let w = WaypointSet {
            times: vec![0.0, 0.5, 0.5, 1.0],
            points: vec![vec![0.0], vec![1.0], vec![0.5], vec![0.0]],
        };
        assert!(matches!(fit_min_acceleration_path(&w, 6), Err(Error::Singular { .. })));
    }

    #[test]
    fn gram_matches_quadrature() {
        let h = acceleration_gram(5);
        // ∫ (6τ)(12τ²) = 72/4 = 18
        assert!((h[(3, 4)] - 18.0).abs() < 1e-14);
        assert_eq!(h[(1, 3)], 0.0);
        assert!((h[(2, 2)] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = PolynomialPath::new(vec![vec![0.3, -1.0, 2.0, 0.5], vec![1.0, 0.0, -0.7, 0.2]], 2.0).unwrap();
        let h = 1e-5;
        for t in [0.0, 0.4, 1.3, 2.0] {
            let (pp, pm) = (p.position(t + h), p.position(t - h));
            let (vp, vm) = (p.velocity(t + h), p.velocity(t - h));
            let (v, a) = (p.velocity(t), p.acceleration(t));
            for d in 0..2 {
                assert!(((pp[d] - pm[d]) / (2.0 * h) - v[d]).abs() < 1e-8);
                assert!(((vp[d] - vm[d]) / (2.0 * h) - a[d]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn switch_weight_midpoint_and_tails() {
        assert_eq!(switch_weight(0.5, 0.5, 20.0).0, 0.5);
        assert!(1.0 - switch_weight(0.0, 0.5, 20.0).0 < (-10.0f64).exp() * 1.01);
        assert!(switch_weight(1.0, 0.5, 20.0).0 < (-10.0f64).exp() * 1.01);
    }

    #[test]
    fn switching_field_is_consistent() {
        let f = switching_field([line([0.0, 0.0], [1.0, 0.5]), line([1.0, 1.0], [0.0, 0.2])], 0.5, 20.0).unwrap();
        for (x, t) in [([0.3, 0.2], 0.1), ([0.9, -0.4], 0.5), ([0.0, 1.0], 0.97)] {
            let r = validate_derivatives(&f, &x, t, 1e-6, 1e-6);
            assert!(r.passed(), "{r:?}");
            assert_eq!(f.hessian(&x, t).unwrap(), DenseMatrix::scaled_identity(2, 2.0));
        }
        let t = 0.3;
        let xs = f.blended_target(t);
        assert!(linalg::norm(&f.gradient(&xs, t).unwrap()) < 1e-15);
    }

    #[test]
    fn early_switching_objective_follows_first_target() {
        let f = switching_field([line([0.0, 0.0], [1.0, 0.5]), line([1.0, 1.0], [0.0, 0.2])], 0.5, 20.0).unwrap();
        let x = [0.4, 0.7];
        let y1 = f.paths()[0].position(0.0);
        let d = linalg::distance(&x, &y1);
        assert!((f.value(&x, 0.0).unwrap() - d * d).abs() < 2.0 * (-10.0f64).exp());
    }

    #[test]
    fn disk_constraint_derivatives() {
        let d = DiskConstraint::new(line([0.1, 0.2], [0.9, 0.4]), 1, 0.05).unwrap();
        let x = [0.3, -0.1, 0.5, 0.35];
        for t in [0.0, 0.45, 1.0] {
            let r = validate_derivatives(&d, &x, t, 1e-6, 1e-6);
            assert!(r.passed(), "{r:?}");
        }
        let y = line([0.1, 0.2], [0.9, 0.4]).position(0.3);
        assert!((d.value(&[9.0, 9.0, y[0], y[1]], 0.3).unwrap() + 0.0025).abs() < 1e-15);
    }

    #[test]
    fn coincident_targets_have_zero_objective() {
        let p = line([0.2, 0.2], [0.6, 0.9]);
        let problem = two_agent_problem([p.clone(), p.clone()], 0.05).unwrap();
        let y = p.position(0.5);
        let x = [y[0], y[1], y[0], y[1]];
        assert_eq!(problem.objective.value(&x, 0.5).unwrap(), 0.0);
        assert!(problem.constraint_values(&x, 0.5).unwrap().iter().all(|&v| v < 0.0));
        assert!(problem.strong_convexity > 0.0);
    }

    #[test]
    fn mismatched_paths_are_rejected() {
        let a = line([0.0, 0.0], [1.0, 1.0]);
        let b = PolynomialPath::new(vec![vec![0.0, 1.0], vec![0.0, 1.0]], 2.0).unwrap();
        assert!(switching_objective([a.clone(), b], 0.5, 20.0).is_err());
        let c = PolynomialPath::new(vec![vec![0.0, 1.0]], 1.0).unwrap();
        assert!(two_agent_problem([c.clone(), c], 0.05).is_err());
    }
}
