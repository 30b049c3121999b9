//! Result files: per-trial metrics, rollout logs, plot data and cost rasters.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use super::pipeline::{FailureReason, Method, TrialContext, TrialOutcome};
use super::suite::{summarize, MethodSummary};
use super::{HarnessError, RunMetrics};
use crate::geom::{Bounds, Point2};
use crate::track::RolloutLog;
use crate::trajopt::write_trace_csv;

/// One row of the per-trial metrics table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub scenario: String,
    pub method: Method,
    pub trial: usize,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub failure: Option<FailureReason>,
}

impl TrialRecord {
    pub fn new(
        scenario: &str,
        method: Method,
        trial: usize,
        seed: u64,
        outcome: &TrialOutcome,
    ) -> Self {
        Self {
            scenario: scenario.to_string(),
            method,
            trial,
            seed,
            metrics: outcome.metrics,
            failure: outcome.failure,
        }
    }
}

pub(crate) const METRICS_HEADER: [&str; 11] = [
    "scenario",
    "method",
    "trial",
    "seed",
    "success",
    "progress",
    "time",
    "length",
    "az_rms_mean",
    "az_max",
    "failure",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-trial metrics as CSV; absent metrics are empty cells.
pub(crate) fn write_metrics_csv(path: &Path, records: &[TrialRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(METRICS_HEADER)?;
    for r in records {
        let m = &r.metrics;
        let failure = match r.failure {
            Some(FailureReason::TimeCap) => "time_cap",
            Some(FailureReason::NoPathAtStart) => "no_path_at_start",
            None => "",
        };
        w.write_record(&[
            r.scenario.clone(),
            r.method.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            m.success.to_string(),
            m.progress.to_string(),
            opt(m.time),
            opt(m.length),
            opt(m.az_rms_mean),
            opt(m.az_max),
            failure.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Trajectory overlay for one trial: the driven polyline colored by speed,
/// plus the first plan when there is one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotData {
    pub region: Bounds,
    pub start: Point2,
    pub goal: Point2,
    pub polyline: Vec<Point2>,
    pub speed: Vec<f64>,
    /// `[min, max]` of `speed`, for the color scale.
    pub speed_range: [f64; 2],
    pub az_proxy: Vec<f64>,
    pub astar: Option<Vec<Point2>>,
    pub control_points: Option<Vec<Point2>>,
    pub planned: Option<Vec<Point2>>,
    pub planned_speed: Option<Vec<f64>>,
}

pub fn plot_data(ctx: &TrialContext, outcome: &TrialOutcome) -> Result<PlotData, HarnessError> {
    plot_from_log(
        ctx.scenario.region,
        ctx.scenario.goal,
        &outcome.log,
        outcome,
    )
}

fn plot_from_log(
    region: Bounds,
    goal: Point2,
    log: &RolloutLog,
    outcome: &TrialOutcome,
) -> Result<PlotData, HarnessError> {
    let first = log.rows.first().ok_or(HarnessError::EmptyLog)?;
    let speed: Vec<f64> = log.rows.iter().map(|r| r.v).collect();
    let lo = speed.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = speed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let plan = outcome.first_plan.as_ref();
    Ok(PlotData {
        region,
        start: Point2::new(first.x, first.y),
        goal,
        polyline: log.rows.iter().map(|r| Point2::new(r.x, r.y)).collect(),
        speed,
        speed_range: [lo, hi],
        az_proxy: log.rows.iter().map(|r| r.az_proxy).collect(),
        astar: plan.map(|p| p.astar_points.clone()),
        control_points: plan.map(|p| p.control_points.clone()),
        planned: plan.map(|p| p.trajectory.points.clone()),
        planned_speed: plan.map(|p| p.trajectory.v.clone()),
    })
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    scenario: &'a str,
    method: Method,
    trials: &'a [TrialRecord],
    summary: &'a MethodSummary,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), value)?;
    Ok(())
}

/// Write every artifact of a batch of trials of one method into `out`:
/// `metrics.csv`, `metrics.json`, `cost_raster.json` and, per trial,
/// `rollout_<i>.csv`, `plot_<i>.json` and (gradient-based runs) `trace_<i>.csv`.
pub fn write_run_outputs(
    out: &Path,
    ctx: &TrialContext,
    method: Method,
    trials: &[(TrialRecord, TrialOutcome)],
) -> Result<MethodSummary, HarnessError> {
    fs::create_dir_all(out)?;
    let records: Vec<TrialRecord> = trials.iter().map(|(r, _)| r.clone()).collect();
    write_metrics_csv(&out.join("metrics.csv"), &records)?;
    let summary = summarize(&ctx.scenario.name, method, &records);
    write_json(
        &out.join("metrics.json"),
        &MetricsFile {
            scenario: &ctx.scenario.name,
            method,
            trials: &records,
            summary: &summary,
        },
    )?;
    write_json(&out.join("cost_raster.json"), &ctx.fused()?.to_raster())?;
    for (rec, outcome) in trials {
        let i = rec.trial;
        outcome
            .log
            .write_csv(File::create(out.join(format!("rollout_{i}.csv")))?)?;
        if !outcome.log.is_empty() {
            write_json(
                &out.join(format!("plot_{i}.json")),
                &plot_data(ctx, outcome)?,
            )?;
        }
        if let Some(plan) = &outcome.first_plan {
            write_trace_csv(
                &plan.trace,
                File::create(out.join(format!("trace_{i}.csv")))?,
            )
            .map_err(|e| HarnessError::Io(std::io::Error::other(e.to_string())))?;
        }
    }
    Ok(summary)
}
