//! Continuous-time prediction-correction Newton flows for tracking the
//! minimizer of time-varying convex problems.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`]: dense Cholesky and pivoted LU kernels.
//! * [`field`]: time-varying scalar fields, problems, and a finite-difference checker.
//! * [`schedule`]: barrier coefficient and slack laws.
//! * [`barrier`]: the perturbed log barrier as a field of its own.
//! * [`flow`]: the unconstrained, equality and interior-point flows and the
//!   domain-guarded explicit Euler integrator.
//! * [`oracle`]: frozen-time static solvers and suboptimality bounds.
//! * [`scenario`]: target paths and the switching, two-agent and equality problems.
//! * [`harness`]: run orchestration, decay fits, CSV and summaries.

pub mod barrier;
pub mod error;
pub mod field;
pub mod flow;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod scenario;
pub mod schedule;

pub use barrier::BarrierField;
pub use error::{Error, Result};
pub use field::{
    lagrangian_field, validate_derivatives, AffineEquality, DerivativeReport, EqualitySystem,
    FieldRef, LagrangianField, QuadraticField, TimeVaryingField, TrackingProblem,
};
pub use flow::{integrate, FlowField, FlowState, GainMatrix, IntegratorOptions, Trajectory};
pub use harness::{RunConfig, RunSample, RunTrace, ScenarioKind, Summary};
pub use linalg::DenseMatrix;
pub use oracle::{BoundReport, StaticSolution};
pub use scenario::{PolynomialPath, WaypointSet};
pub use schedule::ScheduleParams;
