//! Batches of trials over scenarios and methods, with mean ± std summaries.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::export::{write_metrics_csv, write_run_outputs, TrialRecord};
use super::pipeline::{run_trial, Method, TrialContext, TrialOutcome};
use super::scenario::ScenarioConfig;
use super::HarnessError;

/// Mean and sample standard deviation over the trials where a metric exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricStat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MetricStat {
    /// `None` when no sample exists. One sample has std 0.
    pub fn from_samples(xs: &[f64]) -> Option<Self> {
        let n = xs.len();
        if n == 0 {
            return None;
        }
        // shifted by the first sample so identical inputs give an exact zero spread
        let x0 = xs[0];
        let shift = xs.iter().map(|x| x - x0).sum::<f64>() / n as f64;
        let mean = x0 + shift;
        let std = if n > 1 {
            (xs.iter().map(|x| (x - x0 - shift).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub scenario: String,
    pub method: Method,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub progress: Option<MetricStat>,
    pub time: Option<MetricStat>,
    pub length: Option<MetricStat>,
    pub az_rms_mean: Option<MetricStat>,
    pub az_max: Option<MetricStat>,
}

pub fn summarize(scenario: &str, method: Method, records: &[TrialRecord]) -> MethodSummary {
    let stat = |f: &dyn Fn(&TrialRecord) -> Option<f64>| {
        MetricStat::from_samples(&records.iter().filter_map(f).collect::<Vec<_>>())
    };
    let successes = records.iter().filter(|r| r.metrics.success).count();
    MethodSummary {
        scenario: scenario.to_string(),
        method,
        trials: records.len(),
        successes,
        success_rate: if records.is_empty() {
            0.0
        } else {
            successes as f64 / records.len() as f64
        },
        progress: stat(&|r| Some(r.metrics.progress)),
        time: stat(&|r| r.metrics.time),
        length: stat(&|r| r.metrics.length),
        az_rms_mean: stat(&|r| r.metrics.az_rms_mean),
        az_max: stat(&|r| r.metrics.az_max),
    }
}

/// Batch description. Scenario paths are relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub scenarios: Vec<PathBuf>,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    /// Overrides each scenario's trial count.
    #[serde(default)]
    pub trials: Option<usize>,
    /// Overrides each scenario's base seed.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Explicit per-trial seeds; takes precedence over `trials` and `seed`.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    pub out: PathBuf,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

impl SuiteConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        let mut cfg: SuiteConfig = serde_json::from_str(&text)
            .map_err(|e| HarnessError::ConfigInvalid(format!("suite JSON: {e}")))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.scenarios.is_empty() || self.methods.is_empty() {
            return Err(HarnessError::ConfigInvalid(
                "suite needs at least one scenario and one method".into(),
            ));
        }
        if self.trials == Some(0) || self.seeds.as_ref().is_some_and(|s| s.is_empty()) {
            return Err(HarnessError::ConfigInvalid(
                "suite needs at least one trial".into(),
            ));
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Seeds of the trials run on `scenario`.
    pub fn trial_seeds(&self, scenario: &ScenarioConfig) -> Vec<u64> {
        if let Some(s) = &self.seeds {
            return s.clone();
        }
        trial_seeds(
            self.seed.unwrap_or(scenario.seed),
            self.trials.unwrap_or(scenario.trials),
        )
    }
}

/// `trials` consecutive seeds starting at `base`.
pub fn trial_seeds(base: u64, trials: usize) -> Vec<u64> {
    (0..trials as u64).map(|i| base.wrapping_add(i)).collect()
}

/// Run `method` once per seed. Trials run in parallel; results keep seed order.
pub fn run_trials(
    ctx: &TrialContext,
    method: Method,
    seeds: &[u64],
) -> Result<Vec<(TrialRecord, TrialOutcome)>, HarnessError> {
    seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            let outcome = run_trial(ctx, method, seed)?;
            Ok((
                TrialRecord::new(&ctx.scenario.name, method, i, seed, &outcome),
                outcome,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<MethodSummary>,
}

/// Run every method on every scenario, writing per-run directories
/// `<out>/<scenario>/<method>/` plus `metrics.csv`, `summary.csv` and
/// `metrics.json` at the top of `out`.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteResult, HarnessError> {
    cfg.validate()?;
    let out = cfg.resolve(&cfg.out);
    std::fs::create_dir_all(&out)?;
    let mut result = SuiteResult {
        records: Vec::new(),
        summaries: Vec::new(),
    };
    for (k, path) in cfg.scenarios.iter().enumerate() {
        let mut scenario = ScenarioConfig::load(cfg.resolve(path))?;
        if scenario.name.is_empty() {
            scenario.name = format!("scenario{k}");
        }
        let ctx = TrialContext::new(&scenario)?;
        let seeds = cfg.trial_seeds(&scenario);
        for &method in &cfg.methods {
            let trials = run_trials(&ctx, method, &seeds)?;
            let dir = out.join(&scenario.name).join(method.to_string());
            let summary = write_run_outputs(&dir, &ctx, method, &trials)?;
            result.records.extend(trials.into_iter().map(|(r, _)| r));
            result.summaries.push(summary);
        }
    }
    write_metrics_csv(&out.join("metrics.csv"), &result.records)?;
    write_summary_csv(&out.join("summary.csv"), &result.summaries)?;
    serde_json::to_writer_pretty(
        std::io::BufWriter::new(std::fs::File::create(out.join("metrics.json"))?),
        &result,
    )?;
    Ok(result)
}

fn write_summary_csv(path: &Path, rows: &[MethodSummary]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![
        "scenario".to_string(),
        "method".into(),
        "trials".into(),
        "success_rate".into(),
    ];
    for m in ["progress", "time", "length", "az_rms_mean", "az_max"] {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    w.write_record(&header)?;
    for s in rows {
        let mut rec = vec![
            s.scenario.clone(),
            s.method.to_string(),
            s.trials.to_string(),
            s.success_rate.to_string(),
        ];
        for stat in [s.progress, s.time, s.length, s.az_rms_mean, s.az_max] {
            rec.push(stat.map(|x| x.mean.to_string()).unwrap_or_default());
            rec.push(stat.map(|x| x.std.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{FailureReason, RunMetrics};

    fn rec(success: bool, time: Option<f64>) -> TrialRecord {
        TrialRecord {
            scenario: "s".into(),
            method: Method::Trail,
            trial: 0,
            seed: 0,
            metrics: RunMetrics {
                success,
                progress: 0.5,
                time,
                length: time,
                az_rms_mean: time,
                az_max: time,
            },
            failure: (!success).then_some(FailureReason::TimeCap),
        }
    }

    #[test]
    fn stat_oracle() {
        let s = MetricStat::from_samples(&[1.0, 2.0, 4.0]).unwrap();
        assert!((s.mean - 7.0 / 3.0).abs() < 1e-15);
        let var = ((1.0f64 - 7.0 / 3.0).powi(2)
            + (2.0f64 - 7.0 / 3.0).powi(2)
            + (4.0f64 - 7.0 / 3.0).powi(2))
            / 2.0;
        assert!((s.std - var.sqrt()).abs() < 1e-15);
        assert_eq!(MetricStat::from_samples(&[3.0]).unwrap().std, 0.0);
        assert!(MetricStat::from_samples(&[]).is_none());
    }

    #[test]
    fn failed_runs_have_absent_time() {
        let s = summarize("s", Method::Trail, &[rec(false, None), rec(false, None)]);
        assert_eq!(s.successes, 0);
        assert!(s.time.is_none() && s.length.is_none() && s.az_max.is_none());
        assert_eq!(s.progress.unwrap().mean, 0.5);
        let s = summarize(
            "s",
            Method::Trail,
            &[rec(true, Some(2.0)), rec(false, None)],
        );
        assert_eq!(s.time.unwrap().n, 1);
        assert_eq!(s.success_rate, 0.5);
    }

    #[test]
    fn seeds() {
        assert_eq!(trial_seeds(7, 3), vec![7, 8, 9]);
    }
}
