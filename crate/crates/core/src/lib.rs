//! Terrain-aware motion planning over differentiable terrain fields.
//!
//! The planning stack runs coarse A* over a geometric cost raster, refines the
//! path with gradient-based optimization of Catmull-Rom control points against
//! an implicit bumpiness field (shaping geometry and speed together), time-scales
//! the result into a feasible velocity profile, and tracks it with MPC. MPPI
//! baselines over fixed-resolution cost maps are included for comparison, along
//! with a closed-loop simulation harness.

pub mod astar;
pub mod costmap;
mod dual;
pub mod field;
pub mod geom;
pub mod harness;
pub mod mppi;
pub mod raster;
pub mod spline;
pub mod timescale;
pub mod track;
pub mod trajopt;

pub use geom::{Bounds, Point2};
