//! Gradient-based refinement of a control polygon over a bumpiness field.

mod adam;
pub mod footprint;
pub mod objective;
mod optimize;
pub mod speed;

pub use adam::{clip_grad_norm, Adam};
pub use footprint::{footprint_bumpiness, footprint_sample, FootprintSample, FootprintSpec};
pub use objective::{
    objective, path_bumpiness, path_yaws, Evaluation, ObjectiveTerms, ObjectiveWeights, Problem,
};
pub use optimize::{optimize, write_trace_csv, OptimizeResult, OptimizerConfig, TraceRow};
pub use speed::{
    smin, smin_grad, speed_profile_soft, v_cap, v_pref, SoftSpeedProfile, SpeedParams,
};

use thiserror::Error;

use crate::spline::SplineError;

#[derive(Debug, Error)]
pub enum TrajoptError {
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error("initial path needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("trace output failed: {0}")]
    Io(#[from] std::io::Error),
}
