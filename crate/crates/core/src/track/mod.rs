//! Trajectory tracking: unicycle model, MPC and the closed-loop simulator.

pub mod dynamics;
pub mod mpc;
pub mod sim;

pub use dynamics::{rollout, step_dynamics, ControlInput, UnicycleState};
pub use mpc::{mpc_cost, mpc_solve, MpcError, MpcReference, MpcSolution, MpcWeights, SolveStatus};
pub use sim::{
    simulate, Controller, FeedforwardController, LogRow, MpcTracker, Plant, RolloutLog, SimConfig,
};
