//! Trajectory objective and its exact gradient.
//!
//! ```text
//! J = Σ Δs_i / v̄_i  +  λ_b Σ b̄_i v̄_i Δs_i  +  λ_s Σ Δs_i²  +  λ_κ Σ κ̄_i²
//! ```
//!
//! The gradient is assembled by hand in reverse mode over the dense path and
//! pulled back to control points through the spline Jacobian. Footprint yaw
//! follows the local path tangent and is differentiated as well, so the result
//! is the exact derivative of the implemented `J`.

use serde::{Deserialize, Serialize};

use super::footprint::{footprint_sample, FootprintSpec};
use super::speed::{lateral_speed_limit, smin_grad, v_pref_grad, SpeedParams};
use super::TrajoptError;
use crate::field::TerrainField;
use crate::geom::Point2;
use crate::spline::{
    curvature_with_gradient, interpolate, interpolate_with_jacobian, ControlPolygon, DensePath,
};

/// Lower bound on segment speed inside the time surrogate, m/s.
pub const MIN_SEGMENT_SPEED: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveWeights {
    pub lambda_b: f64,
    pub lambda_s: f64,
    pub lambda_kappa: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            lambda_b: 2.0,
            lambda_s: 0.5,
            lambda_kappa: 1.0,
        }
    }
}

/// Individual objective terms, already weighted.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ObjectiveTerms {
    pub time: f64,
    pub bump: f64,
    pub smoothness: f64,
    pub curvature: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.time + self.bump + self.smoothness + self.curvature
    }
}

/// Everything needed to evaluate `J` for a control polygon.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub bump: &'a dyn TerrainField,
    pub weights: ObjectiveWeights,
    pub speed: SpeedParams,
    pub footprint: FootprintSpec,
    pub n_dense: usize,
}

/// Objective value, breakdown and gradient w.r.t. the interior control points.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub terms: ObjectiveTerms,
    /// `∂J/∂c_m` for `m = 1..M-1` (endpoints excluded).
    pub gradient: Vec<Point2>,
    pub path: DensePath,
    pub bumpiness: Vec<f64>,
    pub speeds: Vec<f64>,
}

impl Evaluation {
    pub fn gradient_norm(&self) -> f64 {
        self.gradient
            .iter()
            .map(|g| g.norm_sq())
            .sum::<f64>()
            .sqrt()
    }
}

/// Per-sample footprint yaw from the forward tangent; the last sample copies
/// its predecessor.
pub fn path_yaws(points: &[Point2]) -> Vec<f64> {
    let n = points.len();
    let mut yaw = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let d = points[i + 1] - points[i];
        yaw[i] = if d.norm_sq() > 0.0 {
            d.y.atan2(d.x)
        } else if i > 0 {
            yaw[i - 1]
        } else {
            0.0
        };
    }
    if n >= 2 {
        yaw[n - 1] = yaw[n - 2];
    }
    yaw
}

/// Footprint bumpiness at each dense sample.
pub fn path_bumpiness(bump: &dyn TerrainField, path: &DensePath, fp: &FootprintSpec) -> Vec<f64> {
    let offsets = fp.offsets();
    path.points
        .iter()
        .zip(path_yaws(&path.points))
        .map(|(&p, yaw)| footprint_sample(bump, p, yaw, &offsets).value)
        .collect()
}

impl<'a> Problem<'a> {
    pub fn new(
        bump: &'a dyn TerrainField,
        weights: ObjectiveWeights,
        speed: SpeedParams,
        footprint: FootprintSpec,
        n_dense: usize,
    ) -> Self {
        Self {
            bump,
            weights,
            speed,
            footprint,
            n_dense,
        }
    }

    /// Dense sample count for a polygon: the configured value, raised if
    /// needed to stay above the control count.
    pub fn dense_count(&self, ctrl: &ControlPolygon) -> usize {
        self.n_dense.max(ctrl.len() + 1)
    }

    /// Objective value only.
    pub fn value(&self, ctrl: &ControlPolygon) -> Result<f64, TrajoptError> {
        let path = interpolate(ctrl, self.dense_count(ctrl))?;
        Ok(self.terms_on_path(&path).0.total())
    }

    fn terms_on_path(&self, path: &DensePath) -> (ObjectiveTerms, Vec<f64>, Vec<f64>) {
        let bumps = path_bumpiness(self.bump, path, &self.footprint);
        let sp = &self.speed;
        let speeds: Vec<f64> = path
            .curvatures
            .iter()
            .zip(&bumps)
            .map(|(&k, &b)| {
                let cap = smin_grad(sp.v_max, lateral_speed_limit(k, sp).0, sp.tau).0;
                smin_grad(cap, v_pref_grad(b, sp).0, sp.tau).0
            })
            .collect();
        let w = &self.weights;
        let mut t = ObjectiveTerms::default();
        for (i, &ds) in path.seg_lengths.iter().enumerate() {
            let vbar = 0.5 * (speeds[i] + speeds[i + 1]);
            let bbar = 0.5 * (bumps[i] + bumps[i + 1]);
            t.time += ds / vbar.max(MIN_SEGMENT_SPEED);
            t.bump += w.lambda_b * bbar * vbar * ds;
            t.smoothness += w.lambda_s * ds * ds;
        }
        let k = &path.curvatures;
        for i in 1..k.len().saturating_sub(1) {
            let kbar = 0.5 * (k[i] + k[i + 1]);
            t.curvature += w.lambda_kappa * kbar * kbar;
        }
        (t, bumps, speeds)
    }

    /// Objective value and exact gradient.
    pub fn evaluate(&self, ctrl: &ControlPolygon) -> Result<Evaluation, TrajoptError> {
        let (path, jac) = interpolate_with_jacobian(ctrl, self.dense_count(ctrl))?;
        let pts = &path.points;
        let n = pts.len();
        let sp = &self.speed;
        let w = &self.weights;

        // Forward pass.
        let yaws = path_yaws(pts);
        let offsets = self.footprint.offsets();
        let foot: Vec<_> = pts
            .iter()
            .zip(&yaws)
            .map(|(&p, &y)| footprint_sample(self.bump, p, y, &offsets))
            .collect();
        let bumps: Vec<f64> = foot.iter().map(|f| f.value).collect();

        let mut kappa = vec![0.0; n];
        let mut kappa_grad = vec![[Point2::ZERO; 3]; n];
        for i in 1..n - 1 {
            let (k, g) = curvature_with_gradient(pts[i - 1], pts[i], pts[i + 1]);
            kappa[i] = k.value;
            kappa_grad[i] = g;
        }
        kappa[0] = kappa[1];
        kappa[n - 1] = kappa[n - 2];

        struct SpeedNode {
            v: f64,
            dv_dk: f64,
            dv_db: f64,
        }
        let nodes: Vec<SpeedNode> = (0..n)
            .map(|i| {
                let (lat, dlat) = lateral_speed_limit(kappa[i], sp);
                let (cap, _, wcap_lat) = smin_grad(sp.v_max, lat, sp.tau);
                let (pref, dpref) = v_pref_grad(bumps[i], sp);
                let (v, wv_cap, wv_pref) = smin_grad(cap, pref, sp.tau);
                SpeedNode {
                    v,
                    dv_dk: wv_cap * wcap_lat * dlat,
                    dv_db: wv_pref * dpref,
                }
            })
            .collect();
        let speeds: Vec<f64> = nodes.iter().map(|s| s.v).collect();

        // Objective and adjoints.
        let mut terms = ObjectiveTerms::default();
        let mut g_v = vec![0.0; n];
        let mut g_b = vec![0.0; n];
        let mut g_k = vec![0.0; n];
        let mut g_p = vec![Point2::ZERO; n];

        for i in 0..n - 1 {
            let ds = path.seg_lengths[i];
            let vbar = 0.5 * (speeds[i] + speeds[i + 1]);
            let bbar = 0.5 * (bumps[i] + bumps[i + 1]);
            let mut g_ds = 0.0;
            let mut g_vbar = 0.0;

            if vbar > MIN_SEGMENT_SPEED {
                terms.time += ds / vbar;
                g_ds += 1.0 / vbar;
                g_vbar -= ds / (vbar * vbar);
            } else {
                terms.time += ds / MIN_SEGMENT_SPEED;
                g_ds += 1.0 / MIN_SEGMENT_SPEED;
            }

            terms.bump += w.lambda_b * bbar * vbar * ds;
            g_ds += w.lambda_b * bbar * vbar;
            g_vbar += w.lambda_b * bbar * ds;
            let g_bbar = w.lambda_b * vbar * ds;

            terms.smoothness += w.lambda_s * ds * ds;
            g_ds += 2.0 * w.lambda_s * ds;

            g_v[i] += 0.5 * g_vbar;
            g_v[i + 1] += 0.5 * g_vbar;
            g_b[i] += 0.5 * g_bbar;
            g_b[i + 1] += 0.5 * g_bbar;

            if ds > 0.0 {
                let e = (pts[i + 1] - pts[i]) * (g_ds / ds);
                g_p[i + 1] += e;
                g_p[i] -= e;
            }
        }

        for i in 1..n - 1 {
            let kbar = 0.5 * (kappa[i] + kappa[i + 1]);
            terms.curvature += w.lambda_kappa * kbar * kbar;
            g_k[i] += w.lambda_kappa * kbar;
            g_k[i + 1] += w.lambda_kappa * kbar;
        }

        for i in 0..n {
            g_k[i] += g_v[i] * nodes[i].dv_dk;
            g_b[i] += g_v[i] * nodes[i].dv_db;
        }

        // End curvatures are copies of their neighbours.
        g_k[1] += g_k[0];
        g_k[n - 2] += g_k[n - 1];
        for i in 1..n - 1 {
            let [ga, gb, gc] = kappa_grad[i];
            g_p[i - 1] += ga * g_k[i];
            g_p[i] += gb * g_k[i];
            g_p[i + 1] += gc * g_k[i];
        }

        // Footprint: through the center and through the tangent yaw.
        let mut g_yaw = vec![0.0; n];
        for i in 0..n {
            g_p[i] += foot[i].grad_center * g_b[i];
            g_yaw[i] = g_b[i] * foot[i].d_yaw;
        }
        g_yaw[n - 2] += g_yaw[n - 1];
        for i in 0..n - 1 {
            let d = pts[i + 1] - pts[i];
            let d2 = d.norm_sq();
            if d2 > 0.0 {
                let dpsi = d.perp() * (g_yaw[i] / d2);
                g_p[i + 1] += dpsi;
                g_p[i] -= dpsi;
            }
        }

        let full = jac.pullback(&g_p);
        let m = ctrl.len();
        let gradient = (1..m - 1)
            .map(|c| Point2::new(full[2 * c], full[2 * c + 1]))
            .collect();

        Ok(Evaluation {
            value: terms.total(),
            terms,
            gradient,
            path,
            bumpiness: bumps,
            speeds,
        })
    }
}

/// Evaluate `J` and its gradient w.r.t. the interior control points.
pub fn objective(
    ctrl: &ControlPolygon,
    bump: &dyn TerrainField,
    weights: &ObjectiveWeights,
    params: &SpeedParams,
    fp: &FootprintSpec,
    n_dense: usize,
) -> Result<(f64, Vec<Point2>), TrajoptError> {
    let e = Problem::new(bump, *weights, *params, *fp, n_dense).evaluate(ctrl)?;
    Ok((e.value, e.gradient))
}
