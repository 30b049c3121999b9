//! Receding-horizon tracking for the unicycle.
//!
//! Single shooting over the input sequence. Each start is refined with a
//! projected Levenberg-Marquardt iteration on the stacked weighted residuals;
//! the input box is enforced by projection after every step.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dynamics::{rollout, ControlInput, UnicycleState};
use crate::geom::wrap_angle;
use crate::timescale::{Trajectory, VehicleLimits};

#[derive(Debug, Error)]
pub enum MpcError {
    #[error("reference needs {expected_states} states and {expected_inputs} inputs, got {states} and {inputs}")]
    ReferenceShape {
        expected_states: usize,
        expected_inputs: usize,
        states: usize,
        inputs: usize,
    },
    #[error("invalid MPC weights: {0}")]
    InvalidWeights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpcWeights {
    /// Diagonal state weights for (x, y, θ).
    pub q: [f64; 3],
    /// Diagonal input weights for (v, ω).
    pub r: [f64; 2],
    pub q_terminal: [f64; 3],
    pub horizon: usize,
    pub dt: f64,
    pub max_iterations: usize,
}

impl Default for MpcWeights {
    fn default() -> Self {
        Self {
            q: [10.0, 10.0, 1.0],
            r: [0.1, 0.1],
            q_terminal: [20.0, 20.0, 2.0],
            horizon: 20,
            dt: 0.1,
            max_iterations: 30,
        }
    }
}

impl MpcWeights {
    pub fn validate(&self) -> Result<(), MpcError> {
        let all = self.q.iter().chain(&self.r).chain(&self.q_terminal);
        if all.clone().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(MpcError::InvalidWeights(
                "weights must be nonnegative and finite".into(),
            ));
        }
        if self.horizon == 0 {
            return Err(MpcError::InvalidWeights(
                "horizon must be at least 1".into(),
            ));
        }
        if !(self.dt > 0.0) {
            return Err(MpcError::InvalidWeights("dt must be positive".into()));
        }
        Ok(())
    }
}

/// Horizon reference: `N + 1` states and `N` inputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MpcReference {
    pub states: Vec<UnicycleState>,
    pub inputs: Vec<ControlInput>,
}

impl MpcReference {
    /// Sample `traj` at `t0, t0 + dt, …, t0 + N dt`.
    pub fn from_trajectory(traj: &Trajectory, t0: f64, horizon: usize, dt: f64) -> Self {
        let mut states = Vec::with_capacity(horizon + 1);
        let mut inputs = Vec::with_capacity(horizon);
        for k in 0..=horizon {
            let s = traj.sample(t0 + k as f64 * dt);
            states.push(UnicycleState::new(s.position.x, s.position.y, s.yaw));
            if k < horizon {
                inputs.push(ControlInput::new(s.v, s.omega));
            }
        }
        Self { states, inputs }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    /// Improved on (or matched) every start.
    Converged,
    /// No start decreased the objective; the clamped reference input was kept.
    Diverged,
}

#[derive(Debug, Clone)]
pub struct MpcSolution {
    /// First input of the optimal sequence, to be applied now.
    pub input: ControlInput,
    pub inputs: Vec<ControlInput>,
    pub predicted: Vec<UnicycleState>,
    pub cost: f64,
    pub status: SolveStatus,
}

/// Quadratic tracking cost of an input sequence from `s0`.
pub fn mpc_cost(
    s0: UnicycleState,
    inputs: &[ControlInput],
    reference: &MpcReference,
    w: &MpcWeights,
) -> f64 {
    let xs = rollout(s0, inputs, w.dt);
    let n = inputs.len();
    let state_term = |s: &UnicycleState, r: &UnicycleState, q: &[f64; 3]| {
        let e = [s.x - r.x, s.y - r.y, wrap_angle(s.theta - r.theta)];
        q[0] * e[0] * e[0] + q[1] * e[1] * e[1] + q[2] * e[2] * e[2]
    };
    let mut c = 0.0;
    for k in 0..n {
        c += state_term(&xs[k], &reference.states[k], &w.q);
        let du = [
            inputs[k].v - reference.inputs[k].v,
            inputs[k].omega - reference.inputs[k].omega,
        ];
        c += w.r[0] * du[0] * du[0] + w.r[1] * du[1] * du[1];
    }
    c + state_term(&xs[n], &reference.states[n], &w.q_terminal)
}

/// Weighted residual vector and its Jacobian w.r.t. the stacked inputs
/// `(v_0, ω_0, …, v_{N-1}, ω_{N-1})`. The fixed initial-state term is omitted.
fn residuals(
    s0: UnicycleState,
    inputs: &[ControlInput],
    reference: &MpcReference,
    w: &MpcWeights,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = inputs.len();
    let xs = rollout(s0, inputs, w.dt);
    let rows = 3 * n + 2 * n;
    let mut r = DVector::zeros(rows);
    let mut jac = DMatrix::zeros(rows, 2 * n);

    // sens[j] = ∂x_k/∂u_j (3×2) for the current k, advanced in place.
    let mut sens = vec![[[0.0; 2]; 3]; n];
    for k in 1..=n {
        let prev = xs[k - 1];
        let u = inputs[k - 1];
        let (sin, cos) = prev.theta.sin_cos();
        // ∂x_k/∂θ_{k-1} couples x and y to heading sensitivities.
        for s in sens.iter_mut().take(k - 1) {
            let dth = s[2];
            for c in 0..2 {
                s[0][c] += -w.dt * sin * u.v * dth[c];
                s[1][c] += w.dt * cos * u.v * dth[c];
            }
        }
        sens[k - 1] = [[w.dt * cos, 0.0], [w.dt * sin, 0.0], [0.0, w.dt]];

        let q = if k == n { &w.q_terminal } else { &w.q };
        let refs = &reference.states[k];
        let e = [
            xs[k].x - refs.x,
            xs[k].y - refs.y,
            wrap_angle(xs[k].theta - refs.theta),
        ];
        for a in 0..3 {
            let sq = q[a].sqrt();
            let row = 3 * (k - 1) + a;
            r[row] = sq * e[a];
            for (j, s) in sens.iter().enumerate().take(k) {
                jac[(row, 2 * j)] = sq * s[a][0];
                jac[(row, 2 * j + 1)] = sq * s[a][1];
            }
        }
    }
    for k in 0..n {
        let base = 3 * n + 2 * k;
        let (sv, sw) = (w.r[0].sqrt(), w.r[1].sqrt());
        r[base] = sv * (inputs[k].v - reference.inputs[k].v);
        r[base + 1] = sw * (inputs[k].omega - reference.inputs[k].omega);
        jac[(base, 2 * k)] = sv;
        jac[(base + 1, 2 * k + 1)] = sw;
    }
    (r, jac)
}

fn project(u: &mut [f64], limits: &VehicleLimits) {
    for pair in u.chunks_mut(2) {
        pair[0] = pair[0].clamp(limits.v_min, limits.v_max);
        pair[1] = pair[1].clamp(limits.omega_min, limits.omega_max);
    }
}

fn unpack(u: &[f64]) -> Vec<ControlInput> {
    u.chunks(2).map(|p| ControlInput::new(p[0], p[1])).collect()
}

/// Projected Levenberg-Marquardt from one start. Returns the refined
/// sequence and its cost.
fn refine(
    s0: UnicycleState,
    start: Vec<ControlInput>,
    reference: &MpcReference,
    w: &MpcWeights,
    limits: &VehicleLimits,
) -> (Vec<ControlInput>, f64) {
    let mut u: Vec<f64> = start.iter().flat_map(|c| [c.v, c.omega]).collect();
    project(&mut u, limits);
    let mut cost = mpc_cost(s0, &unpack(&u), reference, w);
    let mut mu = 1e-3;
    for _ in 0..w.max_iterations {
        if cost <= 1e-24 {
            break;
        }
        let (r, jac) = residuals(s0, &unpack(&u), reference, w);
        let jt = jac.transpose();
        let g = &jt * &r;
        let h = &jt * &jac;
        let mut improved = false;
        for _ in 0..8 {
            let mut damped = h.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += mu * (1.0 + h[(i, i)]);
            }
            let Some(chol) = damped.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let mut cand: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            project(&mut cand, limits);
            let c = mpc_cost(s0, &unpack(&cand), reference, w);
            if c < cost {
                let rel = (cost - c) / cost.max(1e-300);
                u = cand;
                cost = c;
                mu = (mu * 0.3).max(1e-9);
                improved = rel > 1e-12;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (unpack(&u), cost)
}

/// Solve the tracking problem from `s0`.
///
/// Starts from the clamped reference inputs and, if given, a warm start. The
/// result never costs more than the clamped reference sequence.
pub fn mpc_solve(
    s0: UnicycleState,
    reference: &MpcReference,
    weights: &MpcWeights,
    limits: &VehicleLimits,
    warm_start: Option<&[ControlInput]>,
) -> Result<MpcSolution, MpcError> {
    weights.validate()?;
    let n = weights.horizon;
    if reference.states.len() != n + 1 || reference.inputs.len() != n {
        return Err(MpcError::ReferenceShape {
            expected_states: n + 1,
            expected_inputs: n,
            states: reference.states.len(),
            inputs: reference.inputs.len(),
        });
    }
    let fallback: Vec<ControlInput> = reference.inputs.iter().map(|u| u.clamped(limits)).collect();
    let fallback_cost = mpc_cost(s0, &fallback, reference, weights);

    let mut starts = vec![fallback.clone()];
    if let Some(ws) = warm_start.filter(|ws| ws.len() == n) {
        starts.push(ws.to_vec());
    }
    let mut best = (fallback.clone(), fallback_cost);
    for start in starts {
        let (u, c) = refine(s0, start, reference, weights, limits);
        if c < best.1 {
            best = (u, c);
        }
    }
    let status = if best.1 < fallback_cost || fallback_cost <= 1e-24 {
        SolveStatus::Converged
    } else {
        SolveStatus::Diverged
    };
    let (inputs, cost) = best;
    let predicted = rollout(s0, &inputs, weights.dt);
    Ok(MpcSolution {
        input: inputs[0],
        inputs,
        predicted,
        cost,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::dynamics::step_dynamics;

    fn straight_reference(s0: UnicycleState, v: f64, w: &MpcWeights) -> MpcReference {
        let inputs = vec![ControlInput::new(v, 0.0); w.horizon];
        MpcReference {
            states: rollout(s0, &inputs, w.dt),
            inputs,
        }
    }

    #[test]
    fn zero_residual_returns_reference() {
        let w = MpcWeights::default();
        let s0 = UnicycleState::new(1.0, 2.0, 0.3);
        let inputs: Vec<_> = (0..w.horizon)
            .map(|k| ControlInput::new(1.0 + 0.01 * k as f64, 0.2))
            .collect();
        let reference = MpcReference {
            states: rollout(s0, &inputs, w.dt),
            inputs: inputs.clone(),
        };
        let sol = mpc_solve(s0, &reference, &w, &VehicleLimits::default(), None).unwrap();
        assert!((sol.input.v - inputs[0].v).abs() < 1e-4);
        assert!((sol.input.omega - inputs[0].omega).abs() < 1e-4);
        assert!(sol.cost < 1e-12);
    }

    #[test]
    fn saturates_speed() {
        let w = MpcWeights::default();
        let lim = VehicleLimits::default();
        let s0 = UnicycleState::default();
        let reference = straight_reference(s0, 3.0, &w);
        let sol = mpc_solve(s0, &reference, &w, &lim, None).unwrap();
        assert_eq!(sol.input.v, lim.v_max);
    }

    #[test]
    fn never_worse_than_clamped_reference() {
        let w = MpcWeights::default();
        let lim = VehicleLimits::default();
        let reference = straight_reference(UnicycleState::default(), 1.0, &w);
        let s0 = UnicycleState::new(-0.3, 0.4, 0.5);
        let sol = mpc_solve(s0, &reference, &w, &lim, None).unwrap();
        let clamped: Vec<_> = reference.inputs.iter().map(|u| u.clamped(&lim)).collect();
        assert!(sol.cost <= mpc_cost(s0, &clamped, &reference, &w));
        assert_eq!(sol.status, SolveStatus::Converged);
        for u in &sol.inputs {
            assert!(u.v >= lim.v_min && u.v <= lim.v_max);
            assert!(u.omega >= lim.omega_min && u.omega <= lim.omega_max);
        }
    }

    #[test]
    fn residual_jacobian_matches_fd() {
        let w = MpcWeights {
            horizon: 5,
            ..Default::default()
        };
        let s0 = UnicycleState::new(0.1, -0.2, 0.4);
        let inputs: Vec<_> = (0..5)
            .map(|k| ControlInput::new(0.5 + 0.1 * k as f64, 0.3 - 0.1 * k as f64))
            .collect();
        let reference = straight_reference(UnicycleState::default(), 1.0, &w);
        let (_, jac) = residuals(s0, &inputs, &reference, &w);
        let h = 1e-6;
        for j in 0..10 {
            let bump = |d: f64| {
                let mut u: Vec<f64> = inputs.iter().flat_map(|c| [c.v, c.omega]).collect();
                u[j] += d;
                residuals(s0, &unpack(&u), &reference, &w).0
            };
            let fd = (bump(h) - bump(-h)) / (2.0 * h);
            for i in 0..fd.len() {
                assert!(
                    (fd[i] - jac[(i, j)]).abs() < 1e-6,
                    "({i},{j}) {} vs {}",
                    fd[i],
                    jac[(i, j)]
                );
            }
        }
    }

    #[test]
    fn recovers_lateral_offset() {
        let w = MpcWeights::default();
        let lim = VehicleLimits::default();
        let v = 1.0;
        let mut s = UnicycleState::new(0.0, 0.5, 0.0);
        let mut warm = None;
        for step in 0..30 {
            let t0 = step as f64 * w.dt;
            let origin = UnicycleState::new(v * t0, 0.0, 0.0);
            let reference = straight_reference(origin, v, &w);
            let sol = mpc_solve(s, &reference, &w, &lim, warm.as_deref()).unwrap();
            s = step_dynamics(s, sol.input, w.dt);
            let mut shifted = sol.inputs[1..].to_vec();
            shifted.push(*sol.inputs.last().unwrap());
            warm = Some(shifted);
        }
        let target = (v * 30.0 * w.dt, 0.0);
        let err = ((s.x - target.0).powi(2) + (s.y - target.1).powi(2)).sqrt();
        assert!(err < 0.05, "position error {err}");
    }
}
