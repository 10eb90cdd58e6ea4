use thiserror::Error;

/// Errors raised by the solvers, flows and harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is numerically singular (pivot {index} = {pivot:e})")]
    Singular { index: usize, pivot: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    /// The point lies outside the perturbed barrier domain at time `t`.
    #[error("domain violation at t = {t}: constraint {index} has margin {margin:e}")]
    DomainViolation { t: f64, index: usize, margin: f64 },

    #[error("problem has no equality system")]
    MissingEqualitySystem,

    #[error("step size collapsed to {step:e} at t = {t}")]
    StepCollapse { t: f64, step: f64 },

    #[error("{solver} did not converge in {iterations} iterations")]
    MaxIterations {
        solver: &'static str,
        iterations: usize,
    },

    #[error("no strictly feasible point found at t = {t}")]
    InfeasibleAtTime { t: f64 },

    #[error("non-positive sample value {value} at t = {t}")]
    NonPositiveValue { t: f64, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("at sample t = {t}: {source}")]
    AtSample { t: f64, source: Box<Error> },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
