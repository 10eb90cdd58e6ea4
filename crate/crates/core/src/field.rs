//! Time-varying scalar fields with analytic space and space-time derivatives,
//! the problems assembled from them, and a finite-difference checker.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};

/// A scalar function `f(x, t)` together with `∇ₓf`, `∇ₓₓf`, `∇ₓₜf` and `∂ₜf`.
///
/// Evaluators are fallible so that fields with a restricted domain (the
/// barrier) can report [`Error::DomainViolation`]. Plain closed-form fields
/// never fail.
pub trait TimeVaryingField: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64], t: f64) -> Result<f64>;
    fn gradient(&self, x: &[f64], t: f64) -> Result<Vec<f64>>;
    fn hessian(&self, x: &[f64], t: f64) -> Result<DenseMatrix>;
    /// Mixed derivative `∂ₜ∇ₓf`.
    fn time_cross(&self, x: &[f64], t: f64) -> Result<Vec<f64>>;
    fn time_partial(&self, x: &[f64], t: f64) -> Result<f64>;
}

pub type FieldRef = Arc<dyn TimeVaryingField>;

impl<F: TimeVaryingField + ?Sized> TimeVaryingField for Arc<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        (**self).value(x, t)
    }
    fn gradient(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        (**self).gradient(x, t)
    }
    fn hessian(&self, x: &[f64], t: f64) -> Result<DenseMatrix> {
        (**self).hessian(x, t)
    }
    fn time_cross(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        (**self).time_cross(x, t)
    }
    fn time_partial(&self, x: &[f64], t: f64) -> Result<f64> {
        (**self).time_partial(x, t)
    }
}

impl<F: TimeVaryingField + ?Sized> TimeVaryingField for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        (**self).value(x, t)
    }
    fn gradient(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        (**self).gradient(x, t)
    }
    fn hessian(&self, x: &[f64], t: f64) -> Result<DenseMatrix> {
        (**self).hessian(x, t)
    }
    fn time_cross(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        (**self).time_cross(x, t)
    }
    fn time_partial(&self, x: &[f64], t: f64) -> Result<f64> {
        (**self).time_partial(x, t)
    }
}

/// `f(x,t) = ½xᵀQx + g(t)ᵀx + k(t)` with `g(t) = g₀ + t·g₁` and
/// `k(t) = k₀ + k₁t + k₂t²`.
#[derive(Debug, Clone)]
pub struct QuadraticField {
    pub q: DenseMatrix,
    pub g0: Vec<f64>,
    pub g1: Vec<f64>,
    pub k: [f64; 3],
}

impl QuadraticField {
    pub fn new(q: DenseMatrix, g0: Vec<f64>, g1: Vec<f64>, k: [f64; 3]) -> Result<Self> {
        let n = q.rows();
        if !q.is_square() || g0.len() != n || g1.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "quadratic field: Q is {}x{}, g0 has {}, g1 has {}",
                q.rows(),
                q.cols(),
                g0.len(),
                g1.len()
            )));
        }
        q.check_symmetric()?;
        Ok(Self { q, g0, g1, k })
    }

    /// Time-invariant `½xᵀQx + gᵀx + k`.
    pub fn stationary(q: DenseMatrix, g: Vec<f64>, k: f64) -> Result<Self> {
        let n = g.len();
        Self::new(q, g, vec![0.0; n], [k, 0.0, 0.0])
    }

    /// Affine `aᵀx + b`.
    pub fn affine(a: Vec<f64>, b: f64) -> Self {
        let n = a.len();
        Self {
            q: DenseMatrix::zeros(n, n),
            g0: a,
            g1: vec![0.0; n],
            k: [b, 0.0, 0.0],
        }
    }

    /// `‖x − (a + t·v)‖²`, a point target moving with constant velocity.
    pub fn moving_target(a: &[f64], v: &[f64]) -> Self {
        let n = a.len();
        assert_eq!(v.len(), n);
        Self {
            q: DenseMatrix::scaled_identity(n, 2.0),
            g0: a.iter().map(|ai| -2.0 * ai).collect(),
            g1: v.iter().map(|vi| -2.0 * vi).collect(),
            k: [linalg::dot(a, a), 2.0 * linalg::dot(a, v), linalg::dot(v, v)],
        }
    }

    fn linear_term(&self, t: f64) -> Vec<f64> {
        self.g0.iter().zip(&self.g1).map(|(a, b)| a + t * b).collect()
    }
}

impl TimeVaryingField for QuadraticField {
    fn dim(&self) -> usize {
        self.g0.len()
    }

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        let qx = self.q.matvec(x);
        Ok(0.5 * linalg::dot(x, &qx)
            + linalg::dot(&self.linear_term(t), x)
            + self.k[0]
            + t * (self.k[1] + t * self.k[2]))
    }

    fn gradient(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let mut g = self.q.matvec(x);
        linalg::axpy(1.0, &self.linear_term(t), &mut g);
        Ok(g)
    }

    fn hessian(&self, _x: &[f64], _t: f64) -> Result<DenseMatrix> {
        Ok(self.q.clone())
    }

    fn time_cross(&self, _x: &[f64], _t: f64) -> Result<Vec<f64>> {
        Ok(self.g1.clone())
    }

    fn time_partial(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(linalg::dot(&self.g1, x) + self.k[1] + 2.0 * t * self.k[2])
    }
}

/// Time-varying linear equality system `A(t) x = b(t)`.
pub trait EqualitySystem: Send + Sync {
    /// Number of equality rows `p`.
    fn rows(&self) -> usize;
    fn matrix(&self, t: f64) -> DenseMatrix;
    fn rhs(&self, t: f64) -> Vec<f64>;
    fn matrix_rate(&self, t: f64) -> DenseMatrix;
    fn rhs_rate(&self, t: f64) -> Vec<f64>;
}

/// `A(t) = A₀ + t·A₁`, `b(t) = b₀ + t·b₁`.
#[derive(Debug, Clone)]
pub struct AffineEquality {
    pub a0: DenseMatrix,
    pub a1: DenseMatrix,
    pub b0: Vec<f64>,
    pub b1: Vec<f64>,
}

impl AffineEquality {
    pub fn new(a0: DenseMatrix, a1: DenseMatrix, b0: Vec<f64>, b1: Vec<f64>) -> Result<Self> {
        let (p, n) = (a0.rows(), a0.cols());
        if a1.rows() != p || a1.cols() != n || b0.len() != p || b1.len() != p {
            return Err(Error::DimensionMismatch(
                "affine equality blocks disagree in shape".into(),
            ));
        }
        Ok(Self { a0, a1, b0, b1 })
    }

    pub fn stationary(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        let a1 = DenseMatrix::zeros(a.rows(), a.cols());
        let b1 = vec![0.0; b.len()];
        Self::new(a, a1, b, b1)
    }
}

impl EqualitySystem for AffineEquality {
    fn rows(&self) -> usize {
        self.a0.rows()
    }
    fn matrix(&self, t: f64) -> DenseMatrix {
        let mut a = self.a0.clone();
        a.add_scaled(t, &self.a1);
        a
    }
    fn rhs(&self, t: f64) -> Vec<f64> {
        self.b0.iter().zip(&self.b1).map(|(a, b)| a + t * b).collect()
    }
    fn matrix_rate(&self, _t: f64) -> DenseMatrix {
        self.a1.clone()
    }
    fn rhs_rate(&self, _t: f64) -> Vec<f64> {
        self.b1.clone()
    }
}

/// An objective, `p` inequality constraints `fᵢ(x,t) ≤ 0`, an optional
/// linear equality system, and the declared strong-convexity modulus.
#[derive(Clone)]
pub struct TrackingProblem {
    pub objective: FieldRef,
    pub constraints: Vec<FieldRef>,
    pub equality: Option<Arc<dyn EqualitySystem>>,
    /// Declared lower bound on curvature; a modeling input, never estimated
    /// by the flows.
    pub strong_convexity: f64,
}

impl fmt::Debug for TrackingProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrackingProblem")
            .field("dim", &self.dim())
            .field("constraints", &self.constraints.len())
            .field("equality_rows", &self.equality.as_ref().map(|e| e.rows()))
            .field("strong_convexity", &self.strong_convexity)
            .finish()
    }
}

impl TrackingProblem {
    pub fn new(objective: FieldRef, strong_convexity: f64) -> Result<Self> {
        if !(strong_convexity > 0.0) {
            return Err(Error::InvalidInput(format!(
                "strong convexity modulus must be positive, got {strong_convexity}"
            )));
        }
        Ok(Self {
            objective,
            constraints: Vec::new(),
            equality: None,
            strong_convexity,
        })
    }

    pub fn with_constraints(mut self, constraints: Vec<FieldRef>) -> Result<Self> {
        let n = self.dim();
        if let Some(bad) = constraints.iter().position(|c| c.dim() != n) {
            return Err(Error::DimensionMismatch(format!(
                "constraint {bad} has dimension {}, objective has {n}",
                constraints[bad].dim()
            )));
        }
        self.constraints = constraints;
        Ok(self)
    }

    pub fn with_equality(mut self, eq: Arc<dyn EqualitySystem>) -> Result<Self> {
        let a = eq.matrix(0.0);
        if a.cols() != self.dim() || a.rows() >= self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "equality matrix is {}x{}, need p x {} with p < {}",
                a.rows(),
                a.cols(),
                self.dim(),
                self.dim()
            )));
        }
        self.equality = Some(eq);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraint_values(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        self.constraints.iter().map(|c| c.value(x, t)).collect()
    }

    /// `maxᵢ fᵢ(x,t)`, or `-∞` when there are no constraints.
    pub fn max_constraint(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self
            .constraint_values(x, t)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Maximum relative errors of the analytic derivatives against central
/// finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeReport {
    pub tolerance: f64,
    pub gradient_error: f64,
    pub hessian_error: f64,
    pub time_cross_error: f64,
    pub time_partial_error: f64,
}

impl DerivativeReport {
    pub fn gradient_ok(&self) -> bool {
        self.gradient_error <= self.tolerance
    }
    pub fn hessian_ok(&self) -> bool {
        self.hessian_error <= self.tolerance
    }
    pub fn time_cross_ok(&self) -> bool {
        self.time_cross_error <= self.tolerance
    }
    pub fn time_partial_ok(&self) -> bool {
        self.time_partial_error <= self.tolerance
    }
    pub fn passed(&self) -> bool {
        self.gradient_ok() && self.hessian_ok() && self.time_cross_ok() && self.time_partial_ok()
    }
    pub fn max_error(&self) -> f64 {
        self.gradient_error
            .max(self.hessian_error)
            .max(self.time_cross_error)
            .max(self.time_partial_error)
    }
}

// ‖a − b‖∞ / max(1, ‖b‖∞)
fn rel_err(analytic: &[f64], fd: &[f64]) -> f64 {
    let scale = fd.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let diff = analytic
        .iter()
        .zip(fd)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    if diff.is_nan() {
        f64::INFINITY
    } else {
        diff / scale
    }
}

/// Compares a field's analytic derivatives with central differences of its
/// value (gradient, `∂ₜf`) and of its gradient (Hessian, `∇ₓₜf`).
///
/// Any evaluation failure at the base or perturbed points yields an infinite
/// error for the affected derivative.
pub fn validate_derivatives(
    field: &dyn TimeVaryingField,
    x: &[f64],
    t: f64,
    h: f64,
    tol: f64,
) -> DerivativeReport {
    let n = field.dim();
    let mut xp = x.to_vec();

    let gradient_error = (|| -> Result<f64> {
        let g = field.gradient(x, t)?;
        let mut fd = vec![0.0; n];
        for i in 0..n {
            xp[i] = x[i] + h;
            let fp = field.value(&xp, t)?;
            xp[i] = x[i] - h;
            let fm = field.value(&xp, t)?;
            xp[i] = x[i];
            fd[i] = (fp - fm) / (2.0 * h);
        }
        Ok(rel_err(&g, &fd))
    })()
    .unwrap_or(f64::INFINITY);

    let mut xp = x.to_vec();
    let hessian_error = (|| -> Result<f64> {
        let hess = field.hessian(x, t)?;
        let mut fd = DenseMatrix::zeros(n, n);
        for j in 0..n {
            xp[j] = x[j] + h;
            let gp = field.gradient(&xp, t)?;
            xp[j] = x[j] - h;
            let gm = field.gradient(&xp, t)?;
            xp[j] = x[j];
            for i in 0..n {
                fd[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        Ok(rel_err(hess.as_slice(), fd.as_slice()))
    })()
    .unwrap_or(f64::INFINITY);

    let time_cross_error = (|| -> Result<f64> {
        let tc = field.time_cross(x, t)?;
        let gp = field.gradient(x, t + h)?;
        let gm = field.gradient(x, t - h)?;
        let fd: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        Ok(rel_err(&tc, &fd))
    })()
    .unwrap_or(f64::INFINITY);

    let time_partial_error = (|| -> Result<f64> {
        let dt = field.time_partial(x, t)?;
        let fd = (field.value(x, t + h)? - field.value(x, t - h)?) / (2.0 * h);
        Ok(rel_err(&[dt], &[fd]))
    })()
    .unwrap_or(f64::INFINITY);

    DerivativeReport {
        tolerance: tol,
        gradient_error,
        hessian_error,
        time_cross_error,
        time_partial_error,
    }
}

/// `L(z,t) = f₀(x,t) + λᵀ(A(t)x − b(t))` on the stacked variable `z = (x, λ)`.
#[derive(Clone)]
pub struct LagrangianField {
    objective: FieldRef,
    equality: Arc<dyn EqualitySystem>,
    n: usize,
    p: usize,
}

impl LagrangianField {
    pub fn primal_dim(&self) -> usize {
        self.n
    }

    pub fn dual_dim(&self) -> usize {
        self.p
    }

    /// `A(t)x − b(t)`, which is also the λ-block of `∇_z L`.
    pub fn feasibility_residual(&self, x: &[f64], t: f64) -> Vec<f64> {
        let ax = self.equality.matrix(t).matvec(&x[..self.n]);
        linalg::sub(&ax, &self.equality.rhs(t))
    }
}

/// Builds the Lagrangian field of an equality-constrained problem.
pub fn lagrangian_field(problem: &TrackingProblem) -> Result<LagrangianField> {
    let equality = problem
        .equality
        .clone()
        .ok_or(Error::MissingEqualitySystem)?;
    if !problem.constraints.is_empty() {
        return Err(Error::InvalidInput(
            "lagrangian field takes equality constraints only".into(),
        ));
    }
    Ok(LagrangianField {
        objective: problem.objective.clone(),
        n: problem.dim(),
        p: equality.rows(),
        equality,
    })
}

impl TimeVaryingField for LagrangianField {
    fn dim(&self) -> usize {
        self.n + self.p
    }

    fn value(&self, z: &[f64], t: f64) -> Result<f64> {
        let (x, lambda) = z.split_at(self.n);
        let r = self.feasibility_residual(x, t);
        Ok(self.objective.value(x, t)? + linalg::dot(lambda, &r))
    }

    fn gradient(&self, z: &[f64], t: f64) -> Result<Vec<f64>> {
        let (x, lambda) = z.split_at(self.n);
        let a = self.equality.matrix(t);
        let mut g = self.objective.gradient(x, t)?;
        linalg::axpy(1.0, &a.tr_matvec(lambda), &mut g);
        g.extend(linalg::sub(&a.matvec(x), &self.equality.rhs(t)));
        Ok(g)
    }

    fn hessian(&self, z: &[f64], t: f64) -> Result<DenseMatrix> {
        let x = &z[..self.n];
        let a = self.equality.matrix(t);
        let mut k = DenseMatrix::zeros(self.n + self.p, self.n + self.p);
        k.set_block(0, 0, &self.objective.hessian(x, t)?);
        k.set_block(0, self.n, &a.transpose());
        k.set_block(self.n, 0, &a);
        Ok(k)
    }

    fn time_cross(&self, z: &[f64], t: f64) -> Result<Vec<f64>> {
        let (x, lambda) = z.split_at(self.n);
        let a_dot = self.equality.matrix_rate(t);
        let mut g = self.objective.time_cross(x, t)?;
        linalg::axpy(1.0, &a_dot.tr_matvec(lambda), &mut g);
        g.extend(linalg::sub(&a_dot.matvec(x), &self.equality.rhs_rate(t)));
        Ok(g)
    }

    fn time_partial(&self, z: &[f64], t: f64) -> Result<f64> {
        let (x, lambda) = z.split_at(self.n);
        let r_dot = linalg::sub(
            &self.equality.matrix_rate(t).matvec(x),
            &self.equality.rhs_rate(t),
        );
        Ok(self.objective.time_partial(x, t)? + linalg::dot(lambda, &r_dot))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `(x₁ − t)²` in one dimension.
    struct Drift;
    impl TimeVaryingField for Drift {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64], t: f64) -> Result<f64> {
            Ok((x[0] - t).powi(2))
        }
        fn gradient(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
            Ok(vec![2.0 * (x[0] - t)])
        }
        fn hessian(&self, _: &[f64], _: f64) -> Result<DenseMatrix> {
            Ok(DenseMatrix::scaled_identity(1, 2.0))
        }
        fn time_cross(&self, _: &[f64], _: f64) -> Result<Vec<f64>> {
            Ok(vec![-2.0])
        }
        fn time_partial(&self, x: &[f64], t: f64) -> Result<f64> {
            Ok(-2.0 * (x[0] - t))
        }
    }

    /// Claims the gradient of ‖x‖² is x.
    struct WrongGradient;
    impl TimeVaryingField for WrongGradient {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64], _: f64) -> Result<f64> {
            Ok(linalg::dot(x, x))
        }
        fn gradient(&self, x: &[f64], _: f64) -> Result<Vec<f64>> {
            Ok(x.to_vec())
        }
        fn hessian(&self, _: &[f64], _: f64) -> Result<DenseMatrix> {
            Ok(DenseMatrix::scaled_identity(2, 2.0))
        }
        fn time_cross(&self, _: &[f64], _: f64) -> Result<Vec<f64>> {
            Ok(vec![0.0; 2])
        }
        fn time_partial(&self, _: &[f64], _: f64) -> Result<f64> {
            Ok(0.0)
        }
    }

    #[test]
    fn squared_norm_passes() {
        let f = QuadraticField::stationary(DenseMatrix::scaled_identity(3, 2.0), vec![0.0; 3], 0.0)
            .unwrap();
        for (x, t) in [([0.3, -1.2, 4.0], 0.0), ([10.0, 2.0, -7.5], 3.5)] {
            let r = validate_derivatives(&f, &x, t, 1e-5, 1e-7);
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn drift_time_cross_matches() {
        let r = validate_derivatives(&Drift, &[0.0], 1.0, 1e-5, 1e-7);
        assert!(r.time_cross_ok(), "{r:?}");
        assert_eq!(Drift.time_cross(&[0.0], 1.0).unwrap(), vec![-2.0]);
        assert!(r.passed());
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let r = validate_derivatives(&WrongGradient, &[1.0, -2.0], 0.0, 1e-5, 1e-5);
        assert!(!r.gradient_ok());
        assert!(!r.passed());
        assert!(r.time_cross_ok() && r.time_partial_ok());
    }

    #[test]
    fn moving_target_derivatives() {
        let f = QuadraticField::moving_target(&[0.2, -0.4], &[1.0, 3.0]);
        let r = validate_derivatives(&f, &[0.7, 0.1], 0.4, 1e-5, 1e-7);
        assert!(r.passed(), "{r:?}");
        let y = [0.2 + 0.4, -0.4 + 1.2];
        assert!(f.value(&y, 0.4).unwrap().abs() < 1e-14);
    }

    fn min_norm_on_line(rate: f64) -> TrackingProblem {
        let f = QuadraticField::stationary(DenseMatrix::scaled_identity(2, 2.0), vec![0.0; 2], 0.0)
            .unwrap();
        let eq = AffineEquality::new(
            DenseMatrix::from_rows(&[[1.0, 1.0]]),
            DenseMatrix::zeros(1, 2),
            vec![2.0],
            vec![rate],
        )
        .unwrap();
        TrackingProblem::new(Arc::new(f), 2.0)
            .unwrap()
            .with_equality(Arc::new(eq))
            .unwrap()
    }

    #[test]
    fn lagrangian_vanishes_at_kkt_point() {
        let l = lagrangian_field(&min_norm_on_line(0.0)).unwrap();
        for t in [0.0, 1.7] {
            let g = l.gradient(&[1.0, 1.0, -2.0], t).unwrap();
            assert!(linalg::norm(&g) < 1e-14);
        }
    }

    #[test]
    fn lagrangian_without_multiplier_reduces_to_objective() {
        let p = min_norm_on_line(0.5);
        let l = lagrangian_field(&p).unwrap();
        let g = l.gradient(&[0.3, -0.8, 0.0], 0.2).unwrap();
        let g0 = p.objective.gradient(&[0.3, -0.8], 0.2).unwrap();
        assert_eq!(&g[..2], g0.as_slice());
    }

    #[test]
    fn lagrangian_static_time_cross_is_zero() {
        let l = lagrangian_field(&min_norm_on_line(0.0)).unwrap();
        assert_eq!(l.time_cross(&[0.4, 0.1, 3.0], 0.5).unwrap()[2], 0.0);
    }

    #[test]
    fn lagrangian_hessian_structure() {
        let l = lagrangian_field(&min_norm_on_line(1.0)).unwrap();
        let h = l.hessian(&[0.4, 0.1, 3.0], 0.5).unwrap();
        assert_eq!(h.max_asymmetry(), 0.0);
        assert_eq!(h[(2, 2)], 0.0);
        let r = validate_derivatives(&l, &[0.4, 0.1, 3.0], 0.5, 1e-5, 1e-7);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn lagrangian_requires_equality() {
        let f = QuadraticField::affine(vec![1.0], 0.0);
        let p = TrackingProblem::new(Arc::new(f), 1.0).unwrap();
        assert!(matches!(lagrangian_field(&p), Err(Error::MissingEqualitySystem)));
    }

    #[test]
    fn problem_rejects_bad_modulus_and_dims() {
        let f: FieldRef = Arc::new(QuadraticField::affine(vec![1.0, 0.0], 0.0));
        assert!(TrackingProblem::new(f.clone(), 0.0).is_err());
        let c: FieldRef = Arc::new(QuadraticField::affine(vec![1.0], 0.0));
        assert!(TrackingProblem::new(f, 1.0).unwrap().with_constraints(vec![c]).is_err());
    }
}
