//! Discrete unicycle model.

use serde::{Deserialize, Serialize};

use crate::geom::{wrap_angle, Point2};
use crate::timescale::VehicleLimits;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UnicycleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl UnicycleState {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Same pose with the heading wrapped to (-π, π].
    pub fn wrapped(&self) -> Self {
        Self {
            theta: wrap_angle(self.theta),
            ..*self
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub v: f64,
    pub omega: f64,
}

impl ControlInput {
    pub const fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    /// Project onto the input box of `limits`.
    pub fn clamped(&self, limits: &VehicleLimits) -> Self {
        Self {
            v: self.v.clamp(limits.v_min, limits.v_max),
            omega: self.omega.clamp(limits.omega_min, limits.omega_max),
        }
    }
}

/// Forward-Euler step `x' = x + dt (v cos θ, v sin θ, ω)`.
#[inline]
pub fn step_dynamics(s: UnicycleState, u: ControlInput, dt: f64) -> UnicycleState {
    let (sin, cos) = s.theta.sin_cos();
    UnicycleState {
        x: s.x + dt * cos * u.v,
        y: s.y + dt * sin * u.v,
        theta: s.theta + dt * u.omega,
    }
}

/// States visited from `s0` under `inputs`, including `s0`.
pub fn rollout(s0: UnicycleState, inputs: &[ControlInput], dt: f64) -> Vec<UnicycleState> {
    let mut out = Vec::with_capacity(inputs.len() + 1);
    out.push(s0);
    let mut s = s0;
    for &u in inputs {
        s = step_dynamics(s, u, dt);
        out.push(s);
    }
    out
}
