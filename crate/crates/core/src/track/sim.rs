//! Closed-loop plant simulation and rollout logging.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::dynamics::{step_dynamics, ControlInput, UnicycleState};
use super::mpc::{mpc_solve, MpcReference, MpcWeights};
use crate::field::TerrainField;
use crate::geom::wrap_angle;
use crate::timescale::{Trajectory, VehicleLimits};

/// Anything that maps (time, state) to a command while following a trajectory.
pub trait Controller {
    fn control(&mut self, t: f64, state: UnicycleState, traj: &Trajectory) -> ControlInput;

    /// Forget warm starts, e.g. after the reference was replanned.
    fn reset(&mut self) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    pub v_cmd: f64,
    pub omega_cmd: f64,
    pub bump: f64,
    pub az_proxy: f64,
}

/// Per-step record of a closed-loop run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutLog {
    pub rows: Vec<LogRow>,
}

impl RolloutLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distance driven, summed over logged positions.
    pub fn path_length(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| ((w[1].x - w[0].x).powi(2) + (w[1].y - w[0].y).powi(2)).sqrt())
            .sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "t",
                "x",
                "y",
                "theta",
                "v",
                "omega",
                "v_cmd",
                "omega_cmd",
                "bump",
                "az_proxy",
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self, csv::Error> {
        let mut r = csv::Reader::from_reader(input);
        let rows = r.deserialize().collect::<Result<Vec<LogRow>, _>>()?;
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Plant step, seconds.
    pub dt: f64,
    pub duration: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            duration: 60.0,
        }
    }
}

/// Stepping plant that logs every applied input.
pub struct Plant<'a> {
    bump: &'a dyn TerrainField,
    limits: VehicleLimits,
    pub dt: f64,
    pub t: f64,
    pub state: UnicycleState,
    pub log: RolloutLog,
}

impl<'a> Plant<'a> {
    pub fn new(
        bump: &'a dyn TerrainField,
        limits: VehicleLimits,
        dt: f64,
        state: UnicycleState,
    ) -> Self {
        Self {
            bump,
            limits,
            dt,
            t: 0.0,
            state,
            log: RolloutLog::default(),
        }
    }

    /// Clamp `cmd` to the input box, log it, and advance one step.
    pub fn step(&mut self, cmd: ControlInput) -> ControlInput {
        let u = cmd.clamped(&self.limits);
        let b = self.bump.sample_clamped(self.state.position()).value;
        let s = self.state.wrapped();
        self.log.rows.push(LogRow {
            t: self.t,
            x: s.x,
            y: s.y,
            theta: s.theta,
            v: u.v,
            omega: u.omega,
            v_cmd: cmd.v,
            omega_cmd: cmd.omega,
            bump: b,
            az_proxy: b * u.v.abs(),
        });
        self.state = step_dynamics(self.state, u, self.dt);
        self.t += self.dt;
        u
    }
}

/// Run `controller` along `traj` for `cfg.duration` seconds from the
/// trajectory's first pose. Trajectories with fewer than two samples give an
/// empty log.
pub fn simulate(
    bump: &dyn TerrainField,
    traj: &Trajectory,
    controller: &mut dyn Controller,
    limits: &VehicleLimits,
    cfg: &SimConfig,
) -> RolloutLog {
    if traj.len() < 2 {
        return RolloutLog::default();
    }
    let s0 = traj.state(0);
    let mut plant = Plant::new(
        bump,
        *limits,
        cfg.dt,
        UnicycleState::new(s0.position.x, s0.position.y, s0.yaw),
    );
    let steps = (cfg.duration / cfg.dt).round() as usize;
    for _ in 0..steps {
        let u = controller.control(plant.t, plant.state, traj);
        plant.step(u);
    }
    plant.log
}

/// MPC tracker with shift warm starts.
#[derive(Debug, Clone)]
pub struct MpcTracker {
    pub weights: MpcWeights,
    pub limits: VehicleLimits,
    warm: Option<Vec<ControlInput>>,
}

impl MpcTracker {
    pub fn new(weights: MpcWeights, limits: VehicleLimits) -> Self {
        Self {
            weights,
            limits,
            warm: None,
        }
    }
}

impl Controller for MpcTracker {
    fn control(&mut self, t: f64, state: UnicycleState, traj: &Trajectory) -> ControlInput {
        let w = &self.weights;
        let reference = MpcReference::from_trajectory(traj, t, w.horizon, w.dt);
        match mpc_solve(state, &reference, w, &self.limits, self.warm.as_deref()) {
            Ok(sol) => {
                let mut shifted = sol.inputs[1..].to_vec();
                shifted.push(*sol.inputs.last().unwrap());
                self.warm = Some(shifted);
                sol.input
            }
            Err(_) => reference.inputs[0].clamped(&self.limits),
        }
    }

    fn reset(&mut self) {
        self.warm = None;
    }
}

/// Open-loop inverse of the Euler model: drive straight at the next reference
/// point, then turn to face the one after.
#[derive(Debug, Clone, Copy)]
pub struct FeedforwardController {
    pub dt: f64,
}

impl Controller for FeedforwardController {
    fn control(&mut self, t: f64, state: UnicycleState, traj: &Trajectory) -> ControlInput {
        let next = traj.sample(t + self.dt).position;
        let after = traj.sample(t + 2.0 * self.dt).position;
        let d = next - state.position();
        let heading = crate::geom::Point2::new(state.theta.cos(), state.theta.sin());
        let v = d.dot(heading) / self.dt;
        let ahead = after - next;
        let target = if ahead.norm_sq() > 1e-24 {
            ahead.y.atan2(ahead.x)
        } else {
            state.theta
        };
        ControlInput::new(v, wrap_angle(target - state.theta) / self.dt)
    }
}
