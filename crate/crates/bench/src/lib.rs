//! Shared fixtures for the benchmarks.

use tvipm_core::harness::build_setup;
use tvipm_core::scenario::{generate_waypoints, WaypointSet};
use tvipm_core::{RunConfig, ScenarioKind, TrackingProblem};

pub const SEED: u64 = 15;

/// Default config of `kind` with the benchmark seed.
pub fn config(kind: ScenarioKind) -> RunConfig {
    let mut cfg = RunConfig::new(kind);
    cfg.seed = SEED;
    cfg
}

/// The two-agent problem with its start point.
pub fn two_agent() -> (TrackingProblem, Vec<f64>) {
    let setup = build_setup(&config(ScenarioKind::TwoAgent)).expect("two-agent setup");
    (setup.problem, setup.initial)
}

pub fn waypoints(l: usize) -> WaypointSet {
    generate_waypoints(SEED, l, 2).expect("waypoints")
}
