//! Scenario files, closed-loop trials, batch suites and result export.

mod bench;
mod export;
mod metrics;
mod pipeline;
mod scenario;
mod suite;

use thiserror::Error;

pub use bench::{
    bench, gradcheck, random_bump_field, random_polygon, BenchReport, GradcheckCase,
    GradcheckReport, GRADCHECK_STEP, GRADCHECK_TOLERANCE,
};
pub use export::{plot_data, write_run_outputs, PlotData, TrialRecord};
pub use metrics::{compute_metrics, windowed_rms, RunMetrics, AZ_WINDOW};
pub use pipeline::{
    run_scenario_trial, run_trial, FailureReason, Method, Plan, TrialContext, TrialOutcome,
};
pub use scenario::{
    logit, BumpinessSpec, FieldPrimitive, MppiSettings, Pose, ScenarioConfig, SimSettings, Terrain,
    TrailSettings, SCENARIO_SCHEMA,
};
pub use suite::{
    run_suite, run_trials, summarize, trial_seeds, MethodSummary, MetricStat, SuiteConfig,
    SuiteResult,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("no traversable path from the start pose")]
    NoPath,
    #[error("planning failed: {0}")]
    Planning(String),
    #[error("rollout log is empty")]
    EmptyLog,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
