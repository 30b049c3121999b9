//! Smooth-minimum speed fusion.

use serde::{Deserialize, Serialize};

use crate::spline::DensePath;

/// Speed-shaping parameters shared by the optimizer and the time-scaler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeedParams {
    /// Top speed, m/s.
    pub v_max: f64,
    /// Lateral acceleration limit, m/s².
    pub a_lat_max: f64,
    /// smin temperature, in speed units.
    pub tau: f64,
    /// Curvature regularizer inside the lateral cap, 1/m.
    pub eps_kappa: f64,
    pub w_time: f64,
    pub w_bump: f64,
    /// Bumpiness exponent; larger values sharpen the speed contrast.
    pub alpha: u32,
    pub eps_bump: f64,
}

impl Default for SpeedParams {
    fn default() -> Self {
        Self {
            v_max: 2.0,
            a_lat_max: 1.5,
            tau: 0.1,
            eps_kappa: 1e-6,
            w_time: 1.0,
            w_bump: 1.0,
            alpha: 2,
            eps_bump: 1e-3,
        }
    }
}

impl SpeedParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("v_max", self.v_max),
            ("a_lat_max", self.a_lat_max),
            ("tau", self.tau),
            ("eps_kappa", self.eps_kappa),
            ("w_time", self.w_time),
            ("w_bump", self.w_bump),
            ("eps_bump", self.eps_bump),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.alpha == 0 {
            return Err("alpha must be >= 1".into());
        }
        Ok(())
    }
}

/// `-τ log(e^{-a/τ} + e^{-b/τ})`, evaluated as `min(a,b) - τ log(1 + e^{-|a-b|/τ})`.
#[inline]
pub fn smin(a: f64, b: f64, tau: f64) -> f64 {
    let m = a.min(b);
    m - tau * (-(a - b).abs() / tau).exp().ln_1p()
}

/// `smin` together with `∂/∂a` and `∂/∂b` (softmin weights that sum to 1).
#[inline]
pub fn smin_grad(a: f64, b: f64, tau: f64) -> (f64, f64, f64) {
    let value = smin(a, b, tau);
    let wa = crate::field::sigmoid((b - a) / tau);
    (value, wa, 1.0 - wa)
}

/// Curvature-limited lateral speed `sqrt(a_lat / (|κ| + ε))` and its κ-derivative.
#[inline]
pub fn lateral_speed_limit(kappa: f64, p: &SpeedParams) -> (f64, f64) {
    let denom = kappa.abs() + p.eps_kappa;
    let r = (p.a_lat_max / denom).sqrt();
    let sign = if kappa > 0.0 {
        1.0
    } else if kappa < 0.0 {
        -1.0
    } else {
        0.0
    };
    (r, -0.5 * r / denom * sign)
}

/// Smooth speed cap `smin(v_max, sqrt(a_lat / (|κ| + ε)))`.
#[inline]
pub fn v_cap(kappa: f64, p: &SpeedParams) -> f64 {
    smin(p.v_max, lateral_speed_limit(kappa, p).0, p.tau)
}

/// Closed-form minimizer of `w_time / v + w_bump b^α v`, regularized by `ε`.
#[inline]
pub fn v_pref(b: f64, p: &SpeedParams) -> f64 {
    (p.w_time / (p.w_bump * (b.powi(p.alpha as i32) + p.eps_bump))).sqrt()
}

/// `v_pref` and `∂v_pref/∂b`.
#[inline]
pub fn v_pref_grad(b: f64, p: &SpeedParams) -> (f64, f64) {
    let a = p.alpha as i32;
    let ba = b.powi(a);
    let v = (p.w_time / (p.w_bump * (ba + p.eps_bump))).sqrt();
    let dba = p.alpha as f64 * b.powi(a - 1);
    (v, -0.5 * v * dba / (ba + p.eps_bump))
}

/// Per-sample cap, preferred speed and fused speed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SoftSpeedProfile {
    pub v_cap: Vec<f64>,
    pub v_pref: Vec<f64>,
    pub v: Vec<f64>,
}

/// Two-stage smooth-min speed: `v_i = smin(v_cap_i, v_pref_i)`.
pub fn speed_profile_soft(
    path: &DensePath,
    bump_vals: &[f64],
    params: &SpeedParams,
) -> SoftSpeedProfile {
    assert_eq!(
        path.len(),
        bump_vals.len(),
        "one bumpiness value per sample"
    );
    let mut out = SoftSpeedProfile::default();
    for (&k, &b) in path.curvatures.iter().zip(bump_vals) {
        let cap = v_cap(k, params);
        let pref = v_pref(b, params);
        out.v_cap.push(cap);
        out.v_pref.push(pref);
        out.v.push(smin(cap, pref, params.tau));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smin_equal_arguments() {
        assert!((smin(1.0, 1.0, 1.0) - (1.0 - 2f64.ln())).abs() < 1e-15);
        assert!((smin(1.0, 1.0, 1.0) - 0.30685).abs() < 1e-5);
    }

    #[test]
    fn smin_small_tau_is_min() {
        assert!((smin(2.0, 5.0, 1e-4) - 2.0).abs() < 1e-9);
        assert!((smin(5.0, 2.0, 1e-4) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn smin_no_overflow() {
        let v = smin(1e4, 2e4, 1e-6);
        assert!((v - 1e4).abs() < 1e-9);
        let v = smin(-1e4, 1e4, 1.0);
        assert!(v.is_finite());
    }

    #[test]
    fn smin_grad_matches_fd() {
        let (a, b, tau) = (1.3, 1.1, 0.2);
        let (_, da, db) = smin_grad(a, b, tau);
        let h = 1e-7;
        let fda = (smin(a + h, b, tau) - smin(a - h, b, tau)) / (2.0 * h);
        let fdb = (smin(a, b + h, tau) - smin(a, b - h, tau)) / (2.0 * h);
        assert!((da - fda).abs() < 1e-8 && (db - fdb).abs() < 1e-8);
        assert!((da + db - 1.0).abs() < 1e-15);
    }

    #[test]
    fn v_pref_examples() {
        let p = SpeedParams {
            w_time: 1.0,
            w_bump: 1.0,
            alpha: 1,
            eps_bump: 0.0,
            ..Default::default()
        };
        assert_eq!(v_pref(1.0, &p), 1.0);
        let p = SpeedParams {
            w_time: 4.0,
            w_bump: 1.0,
            alpha: 2,
            eps_bump: 0.01,
            ..Default::default()
        };
        assert!((v_pref(0.0, &p) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn v_pref_grad_matches_fd() {
        let p = SpeedParams {
            alpha: 3,
            ..Default::default()
        };
        let b = 0.42;
        let (_, d) = v_pref_grad(b, &p);
        let h = 1e-7;
        let fd = (v_pref(b + h, &p) - v_pref(b - h, &p)) / (2.0 * h);
        assert!((d - fd).abs() < 1e-6 * fd.abs().max(1.0));
    }

    #[test]
    fn v_cap_curvature_limited() {
        let p = SpeedParams {
            a_lat_max: 2.0,
            v_max: 5.0,
            tau: 1e-3,
            ..Default::default()
        };
        let cap = v_cap(0.5, &p);
        let hard = (2.0f64 / (0.5 + 1e-6)).sqrt().min(5.0);
        assert!((cap - 2.0).abs() < 1e-3);
        assert!(cap <= hard);
    }
}
