//! Adam over interior control points with projection onto the planning box.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::objective::{ObjectiveTerms, Problem};
use super::{clip_grad_norm, Adam, TrajoptError};
use crate::geom::{Bounds, Point2};
use crate::spline::{ControlPolygon, DEFAULT_DENSE_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Adam step size, meters.
    pub learning_rate: f64,
    pub iterations: usize,
    pub grad_clip_norm: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Planning rectangle the interior points are projected onto. Not part of
    /// serialized configs; callers set it from the planning region.
    #[serde(skip)]
    pub bounds: Bounds,
    pub n_dense: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            iterations: 50,
            grad_clip_norm: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            bounds: Bounds::UNBOUNDED,
            n_dense: DEFAULT_DENSE_SAMPLES,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), TrajoptError> {
        let bad = |m: &str| Err(TrajoptError::InvalidParameter(m.into()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.grad_clip_norm >= 0.0) {
            return bad("grad_clip_norm must be nonnegative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !self.bounds.is_nonempty() {
            return bad("bounds are empty");
        }
        Ok(())
    }
}

/// One optimizer iteration, recorded before the step is taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub value: f64,
    pub terms: ObjectiveTerms,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    /// Best control polygon seen.
    pub polygon: ControlPolygon,
    pub initial_value: f64,
    pub final_value: f64,
    pub best_iteration: usize,
    pub trace: Vec<TraceRow>,
}

/// Refine the interior of `initial`, keeping both endpoints fixed.
///
/// Returns the best iterate, so `final_value <= initial_value` always.
pub fn optimize(
    initial: &[Point2],
    problem: &Problem<'_>,
    cfg: &OptimizerConfig,
) -> Result<OptimizeResult, TrajoptError> {
    if initial.len() < 3 {
        return Err(TrajoptError::TooFewPoints(initial.len()));
    }
    cfg.validate()?;
    let mut ctrl = ControlPolygon::new(initial.to_vec())?;
    let n_int = ctrl.len() - 2;
    let mut params: Vec<f64> = ctrl.interior().iter().flat_map(|p| [p.x, p.y]).collect();
    let mut adam = Adam::new(
        params.len(),
        cfg.learning_rate,
        cfg.beta1,
        cfg.beta2,
        cfg.epsilon,
    );

    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    let mut best = ctrl.clone();
    let mut best_value = f64::INFINITY;
    let mut best_iteration = 0;
    let mut initial_value = f64::NAN;

    for it in 0..=cfg.iterations {
        let eval = problem.evaluate(&ctrl)?;
        let mut grad: Vec<f64> = eval.gradient.iter().flat_map(|g| [g.x, g.y]).collect();
        let grad_norm = clip_grad_norm(&mut grad, cfg.grad_clip_norm);
        trace.push(TraceRow {
            iteration: it,
            value: eval.value,
            terms: eval.terms,
            grad_norm,
        });
        if it == 0 {
            initial_value = eval.value;
        }
        if eval.value < best_value {
            best_value = eval.value;
            best = ctrl.clone();
            best_iteration = it;
        }
        if it == cfg.iterations || !grad.iter().all(|g| g.is_finite()) {
            break;
        }
        adam.step(&mut params, &grad);
        let interior: Vec<Point2> = (0..n_int)
            .map(|k| {
                cfg.bounds
                    .clamp(Point2::new(params[2 * k], params[2 * k + 1]))
            })
            .collect();
        for (k, p) in interior.iter().enumerate() {
            params[2 * k] = p.x;
            params[2 * k + 1] = p.y;
        }
        ctrl.set_interior(&interior);
    }

    Ok(OptimizeResult {
        polygon: best,
        initial_value,
        final_value: best_value,
        best_iteration,
        trace,
    })
}

/// Write an optimizer trace as CSV.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<(), TrajoptError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "iteration",
        "J",
        "time",
        "bump",
        "smoothness",
        "curvature",
        "grad_norm",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record(&[
            r.iteration.to_string(),
            r.value.to_string(),
            r.terms.time.to_string(),
            r.terms.bump.to_string(),
            r.terms.smoothness.to_string(),
            r.terms.curvature.to_string(),
            r.grad_norm.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> TrajoptError {
    TrajoptError::Io(std::io::Error::other(e))
}
