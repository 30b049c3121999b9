//! Forward/backward time-scaling along arc length.
//!
//! Each sample gets a hard speed cap from the top speed, the lateral
//! acceleration limit, the yaw-rate limit and the bump-preferred speed. A
//! forward pass then enforces the acceleration limit from the start speed and
//! a backward pass enforces the deceleration limit into the end speed.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{wrap_angle, Point2};
use crate::spline::DensePath;
use crate::trajopt::{v_pref, SpeedParams};

/// Slack on boundary speeds before a request is declared infeasible, m/s.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Segments shorter than this are merged away before scaling, meters.
pub const MIN_SEGMENT: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TimescaleError {
    #[error("path needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("expected one bumpiness value per sample ({expected}), got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid vehicle limits: {0}")]
    InvalidLimits(String),
    #[error("boundary speeds (start {v_start}, end {v_end}) unreachable: {reason}")]
    InfeasibleBoundary {
        v_start: f64,
        v_end: f64,
        reason: String,
    },
    #[error("trajectory output failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("trajectory serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleLimits {
    pub v_max: f64,
    pub v_min: f64,
    pub a_lat_max: f64,
    pub a_acc: f64,
    pub a_dec: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl Default for VehicleLimits {
    fn default() -> Self {
        Self {
            v_max: 2.0,
            v_min: 0.0,
            a_lat_max: 1.5,
            a_acc: 1.0,
            a_dec: 1.5,
            omega_min: -1.5,
            omega_max: 1.5,
        }
    }
}

impl VehicleLimits {
    pub fn validate(&self) -> Result<(), TimescaleError> {
        let bad = |m: String| Err(TimescaleError::InvalidLimits(m));
        for (name, v) in [
            ("v_max", self.v_max),
            ("a_lat_max", self.a_lat_max),
            ("a_acc", self.a_acc),
            ("a_dec", self.a_dec),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.v_min >= 0.0 && self.v_min <= self.v_max) {
            return bad(format!(
                "need 0 <= v_min <= v_max, got v_min {}",
                self.v_min
            ));
        }
        if !(self.omega_min < 0.0 && self.omega_max > 0.0) {
            return bad(format!(
                "need omega_min < 0 < omega_max, got [{}, {}]",
                self.omega_min, self.omega_max
            ));
        }
        Ok(())
    }
}

/// Time-stamped path with speeds and yaw rates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub points: Vec<Point2>,
    /// Unwrapped heading, radians.
    pub yaw: Vec<f64>,
    pub v: Vec<f64>,
    pub omega: Vec<f64>,
    pub kappa: Vec<f64>,
}

/// Reference state at an instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryState {
    pub position: Point2,
    pub yaw: f64,
    pub v: f64,
    pub omega: f64,
}

#[derive(Serialize)]
struct Row {
    t: f64,
    x: f64,
    y: f64,
    yaw: f64,
    v: f64,
    omega: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.t.last().copied().unwrap_or(0.0)
    }

    pub fn state(&self, i: usize) -> TrajectoryState {
        TrajectoryState {
            position: self.points[i],
            yaw: self.yaw[i],
            v: self.v[i],
            omega: self.omega[i],
        }
    }

    /// Reference state at time `time`, clamped to the trajectory's span.
    ///
    /// Position follows constant-acceleration motion along each segment.
    pub fn sample(&self, time: f64) -> TrajectoryState {
        assert!(!self.is_empty(), "empty trajectory");
        let n = self.len();
        if n == 1 || time <= 0.0 {
            return self.state(0);
        }
        if time >= self.t[n - 1] {
            return self.state(n - 1);
        }
        let i = self
            .t
            .partition_point(|&t| t <= time)
            .saturating_sub(1)
            .min(n - 2);
        let dt = self.t[i + 1] - self.t[i];
        let tau = time - self.t[i];
        let r = if dt > 0.0 { tau / dt } else { 0.0 };
        let ds = self.points[i].distance(self.points[i + 1]);
        let accel = if dt > 0.0 {
            (self.v[i + 1] - self.v[i]) / dt
        } else {
            0.0
        };
        let s = (self.v[i] * tau + 0.5 * accel * tau * tau).clamp(0.0, ds);
        let f = if ds > 0.0 { s / ds } else { r };
        TrajectoryState {
            position: self.points[i].lerp(self.points[i + 1], f),
            yaw: self.yaw[i] + f * (self.yaw[i + 1] - self.yaw[i]),
            v: self.v[i] + r * (self.v[i + 1] - self.v[i]),
            omega: self.omega[i] + r * (self.omega[i + 1] - self.omega[i]),
        }
    }

    /// Index of the sample nearest to `p`.
    pub fn nearest_index(&self, p: Point2) -> usize {
        self.points
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.distance(p).total_cmp(&b.1.distance(p)))
            .map_or(0, |(i, _)| i)
    }

    pub fn to_json_string(&self) -> Result<String, TimescaleError> {
        let rows: Vec<Row> = (0..self.len())
            .map(|i| Row {
                t: self.t[i],
                x: self.points[i].x,
                y: self.points[i].y,
                yaw: self.yaw[i],
                v: self.v[i],
                omega: self.omega[i],
            })
            .collect();
        Ok(serde_json::to_string_pretty(&rows)?)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<(), TimescaleError> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }
}

/// Per-sample hard cap: top speed, lateral limit, yaw-rate limit, preferred speed.
pub fn speed_caps(
    kappa: &[f64],
    bump_vals: &[f64],
    limits: &VehicleLimits,
    params: &SpeedParams,
) -> Vec<f64> {
    kappa
        .iter()
        .zip(bump_vals)
        .map(|(&k, &b)| {
            let lateral = (limits.a_lat_max / (k.abs() + params.eps_kappa)).sqrt();
            let omega_bound = if k > 0.0 {
                limits.omega_max / k
            } else if k < 0.0 {
                limits.omega_min / k
            } else {
                f64::INFINITY
            };
            limits
                .v_max
                .min(lateral)
                .min(omega_bound)
                .min(v_pref(b, params))
        })
        .collect()
}

/// Largest start speed from which the path can still be followed to `v_end`.
pub fn max_feasible_start_speed(
    path: &DensePath,
    bump_vals: &[f64],
    limits: &VehicleLimits,
    params: &SpeedParams,
    v_end: f64,
) -> f64 {
    let (_, kappa, seg, bumps) = dedup(path, bump_vals);
    let mut v = speed_caps(&kappa, &bumps, limits, params);
    let last = v.len() - 1;
    v[last] = v[last].min(v_end);
    for i in (0..seg.len()).rev() {
        v[i] = v[i].min((v[i + 1] * v[i + 1] + 2.0 * limits.a_dec * seg[i]).sqrt());
    }
    v[0]
}

fn dedup(path: &DensePath, bump_vals: &[f64]) -> (Vec<Point2>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut pts = vec![path.points[0]];
    let mut bumps = vec![bump_vals[0]];
    for (i, &p) in path.points.iter().enumerate().skip(1) {
        if p.distance(*pts.last().unwrap()) > MIN_SEGMENT {
            pts.push(p);
            bumps.push(bump_vals[i]);
        }
    }
    // Keep the exact final point even if it merged into its predecessor.
    let last = *path.points.last().unwrap();
    if pts.len() > 1 {
        let k = pts.len() - 1;
        pts[k] = last;
    }
    let dense = DensePath::from_points(pts);
    (dense.points, dense.curvatures, dense.seg_lengths, bumps)
}

/// Assign speeds and timestamps to `path`.
pub fn time_scale(
    path: &DensePath,
    bump_vals: &[f64],
    limits: &VehicleLimits,
    params: &SpeedParams,
    boundary: (f64, f64),
) -> Result<Trajectory, TimescaleError> {
    if path.len() < 2 {
        return Err(TimescaleError::TooFewSamples(path.len()));
    }
    if bump_vals.len() != path.len() {
        return Err(TimescaleError::LengthMismatch {
            expected: path.len(),
            got: bump_vals.len(),
        });
    }
    limits.validate()?;
    let (v_start, v_end) = boundary;
    let infeasible = |reason: String| TimescaleError::InfeasibleBoundary {
        v_start,
        v_end,
        reason,
    };
    if !(v_start >= 0.0 && v_end >= 0.0) {
        return Err(infeasible("boundary speeds must be nonnegative".into()));
    }

    let (points, kappa, seg, bumps) = dedup(path, bump_vals);
    let n = points.len();
    if n == 1 {
        return Ok(Trajectory {
            t: vec![0.0],
            points,
            yaw: vec![0.0],
            v: vec![v_start],
            omega: vec![0.0],
            kappa: vec![0.0],
        });
    }

    let caps = speed_caps(&kappa, &bumps, limits, params);
    if v_start > caps[0] + BOUNDARY_TOL {
        return Err(infeasible(format!(
            "start speed exceeds the local cap {:.6}",
            caps[0]
        )));
    }
    if v_end > caps[n - 1] + BOUNDARY_TOL {
        return Err(infeasible(format!(
            "end speed exceeds the local cap {:.6}",
            caps[n - 1]
        )));
    }

    let mut v = caps;
    v[0] = v_start;
    for i in 0..n - 1 {
        let reach = (v[i] * v[i] + 2.0 * limits.a_acc * seg[i]).sqrt();
        v[i + 1] = v[i + 1].min(reach);
    }
    if v[n - 1] + BOUNDARY_TOL < v_end {
        return Err(infeasible(format!(
            "end speed needs more than {:.6} m/s of acceleration room",
            v[n - 1]
        )));
    }
    v[n - 1] = v_end;
    for i in (0..n - 1).rev() {
        let reach = (v[i + 1] * v[i + 1] + 2.0 * limits.a_dec * seg[i]).sqrt();
        v[i] = v[i].min(reach);
    }
    if v[0] + BOUNDARY_TOL < v_start {
        return Err(infeasible(format!(
            "cannot brake from start speed; at most {:.6} m/s",
            v[0]
        )));
    }

    let mut t = vec![0.0; n];
    for i in 0..n - 1 {
        let vs = v[i] + v[i + 1];
        // Both ends at rest is only possible on a zero-length segment.
        t[i + 1] = t[i] + if vs > 0.0 { 2.0 * seg[i] / vs } else { 0.0 };
    }

    let mut yaw = vec![0.0; n];
    for i in 0..n - 1 {
        let d = points[i + 1] - points[i];
        let raw = d.y.atan2(d.x);
        yaw[i] = if i == 0 {
            raw
        } else {
            yaw[i - 1] + wrap_angle(raw - yaw[i - 1])
        };
    }
    yaw[n - 1] = yaw[n - 2];

    let omega = v
        .iter()
        .zip(&kappa)
        .map(|(&v, &k)| (v * k).clamp(limits.omega_min, limits.omega_max))
        .collect();

    Ok(Trajectory {
        t,
        points,
        yaw,
        v,
        omega,
        kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn no_bump() -> SpeedParams {
        SpeedParams {
            eps_bump: 1e-6,
            ..Default::default()
        }
    }

    fn line(len: f64, n: usize) -> DensePath {
        DensePath::from_points(
            (0..n)
                .map(|i| Point2::new(len * i as f64 / (n - 1) as f64, 0.0))
                .collect(),
        )
    }

    #[test]
    fn trapezoid_oracle() {
        let path = line(10.0, 1001);
        let lim = VehicleLimits {
            v_max: 2.0,
            a_acc: 1.0,
            a_dec: 1.0,
            ..Default::default()
        };
        let tr = time_scale(&path, &vec![0.0; path.len()], &lim, &no_bump(), (0.0, 0.0)).unwrap();
        assert!(
            (tr.duration() - 7.0).abs() / 7.0 < 0.02,
            "{}",
            tr.duration()
        );
        // Cruise covers the middle 6 m.
        let mid = tr.v[500];
        assert!((mid - 2.0).abs() < 1e-12);
    }

    #[test]
    fn arc_steady_state_speed() {
        let r = 2.0;
        let pts = (0..=200).map(|i| {
            let a = PI * i as f64 / 200.0;
            Point2::new(r * a.cos(), r * a.sin())
        });
        let path = DensePath::from_points(pts.collect());
        let lim = VehicleLimits {
            v_max: 10.0,
            a_lat_max: 2.0,
            a_acc: 5.0,
            a_dec: 5.0,
            omega_max: 10.0,
            omega_min: -10.0,
            ..Default::default()
        };
        let tr = time_scale(&path, &vec![0.0; path.len()], &lim, &no_bump(), (0.0, 0.0)).unwrap();
        assert!((tr.v[100] - 2.0).abs() / 2.0 < 0.02, "{}", tr.v[100]);
        assert!((tr.omega[100] - tr.v[100] * tr.kappa[100]).abs() < 1e-12);
    }

    #[test]
    fn degenerate_path_is_single_instant() {
        let p = Point2::new(1.0, 1.0);
        let path = DensePath::from_points(vec![p, p]);
        let tr = time_scale(
            &path,
            &[0.1, 0.1],
            &VehicleLimits::default(),
            &SpeedParams::default(),
            (0.0, 0.0),
        )
        .unwrap();
        assert_eq!(tr.t, vec![0.0]);
        assert_eq!(tr.v, vec![0.0]);
    }

    #[test]
    fn infeasible_boundaries() {
        let path = line(0.1, 11);
        let lim = VehicleLimits::default();
        let b = vec![0.0; 11];
        assert!(matches!(
            time_scale(&path, &b, &lim, &no_bump(), (3.0, 0.0)),
            Err(TimescaleError::InfeasibleBoundary { .. })
        ));
        // 0.1 m is not enough to stop from 1.5 m/s at 1.5 m/s².
        assert!(matches!(
            time_scale(&path, &b, &lim, &no_bump(), (1.5, 0.0)),
            Err(TimescaleError::InfeasibleBoundary { .. })
        ));
        let vmax = max_feasible_start_speed(&path, &b, &lim, &no_bump(), 0.0);
        assert!((vmax - (2.0 * 1.5 * 0.1f64).sqrt()).abs() < 1e-9);
        assert!(time_scale(&path, &b, &lim, &no_bump(), (vmax, 0.0)).is_ok());
    }

    #[test]
    fn limits_respected_and_time_consistent() {
        let pts = (0..120).map(|i| {
            let s = i as f64 * 0.05;
            Point2::new(s, (1.3 * s).sin())
        });
        let path = DensePath::from_points(pts.collect());
        let bumps: Vec<f64> = (0..120)
            .map(|i| if (40..70).contains(&i) { 0.8 } else { 0.1 })
            .collect();
        let lim = VehicleLimits::default();
        let sp = SpeedParams::default();
        let tr = time_scale(&path, &bumps, &lim, &sp, (0.0, 0.0)).unwrap();
        let mut total = 0.0;
        for i in 0..tr.len() {
            assert!(tr.v[i] <= lim.v_max + 1e-9);
            assert!(tr.v[i] * tr.v[i] * tr.kappa[i].abs() <= lim.a_lat_max + 1e-6);
            if i + 1 < tr.len() {
                let ds = tr.points[i].distance(tr.points[i + 1]);
                let a = (tr.v[i + 1].powi(2) - tr.v[i].powi(2)) / (2.0 * ds);
                assert!(a <= lim.a_acc + 1e-6 && a >= -lim.a_dec - 1e-6);
                total += 2.0 * ds / (tr.v[i] + tr.v[i + 1]);
                assert!(tr.t[i + 1] > tr.t[i]);
            }
        }
        assert!((total - tr.duration()).abs() < 1e-9);
    }

    #[test]
    fn sample_interpolates() {
        let path = line(10.0, 101);
        let lim = VehicleLimits {
            v_max: 2.0,
            a_acc: 1.0,
            a_dec: 1.0,
            ..Default::default()
        };
        let tr = time_scale(&path, &vec![0.0; 101], &lim, &no_bump(), (0.0, 0.0)).unwrap();
        let s = tr.sample(1.0);
        // Half a second squared of unit acceleration.
        assert!((s.position.x - 0.5).abs() < 0.02, "{}", s.position.x);
        assert_eq!(tr.sample(-1.0).position, tr.points[0]);
        assert_eq!(tr.sample(100.0).position, tr.points[100]);
        let json = tr.to_json_string().unwrap();
        let rows: Vec<serde_json::Value> = serde_json::from_str(&json).unwrap();
        assert_eq!(rows.len(), 101);
        assert!(rows[0].get("omega").is_some());
    }
}
