//! Per-run metrics from a rollout log.

use serde::{Deserialize, Serialize};

use crate::geom::Point2;
use crate::track::{RolloutLog, UnicycleState};

/// Window over which the vertical-acceleration proxy is RMS-averaged, seconds.
pub const AZ_WINDOW: f64 = 0.1;

/// Outcome metrics of one trial. Everything except `success` and `progress`
/// is reported only for successful runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub success: bool,
    pub progress: f64,
    pub time: Option<f64>,
    pub length: Option<f64>,
    pub az_rms_mean: Option<f64>,
    pub az_max: Option<f64>,
}

/// RMS of `values` over every run of `window` consecutive samples. Shorter
/// inputs form a single window; empty input gives no windows.
pub fn windowed_rms(values: &[f64], window: usize) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let w = window.clamp(1, values.len());
    values
        .windows(w)
        .map(|c| (c.iter().map(|v| v * v).sum::<f64>() / w as f64).sqrt())
        .collect()
}

/// Metrics of a finished run ending in `final_state`.
pub fn compute_metrics(
    log: &RolloutLog,
    final_state: UnicycleState,
    start: Point2,
    goal: Point2,
    success: bool,
) -> RunMetrics {
    let d0 = start.distance(goal);
    let d1 = final_state.position().distance(goal);
    let progress = if success || d0 == 0.0 {
        1.0
    } else {
        (1.0 - d1 / d0).clamp(0.0, 1.0)
    };
    if !success {
        return RunMetrics {
            success,
            progress,
            time: None,
            length: None,
            az_rms_mean: None,
            az_max: None,
        };
    }
    let dt = if log.len() >= 2 {
        log.rows[1].t - log.rows[0].t
    } else {
        AZ_WINDOW
    };
    let window = ((AZ_WINDOW / dt).round() as usize).max(1);
    let az: Vec<f64> = log.rows.iter().map(|r| r.az_proxy).collect();
    let rms = windowed_rms(&az, window);
    let (mean, max) = if rms.is_empty() {
        (0.0, 0.0)
    } else {
        (
            rms.iter().sum::<f64>() / rms.len() as f64,
            rms.iter().copied().fold(0.0, f64::max),
        )
    };
    let tail = log.rows.last().map_or(0.0, |r| {
        Point2::new(r.x, r.y).distance(final_state.position())
    });
    let time = log.rows.last().map_or(0.0, |r| r.t + dt);
    RunMetrics {
        success,
        progress,
        time: Some(time),
        length: Some(log.path_length() + tail),
        az_rms_mean: Some(mean),
        az_max: Some(max),
    }
}
