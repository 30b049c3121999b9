//! Gradient check and per-stage timing.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::astar::{AStar, AStarConfig};
use crate::costmap::CostGrid;
use crate::field::{
    gaussian_bump_field, squash_to_unit, GaussianBump, GaussianBumpField, SquashedField,
};
use crate::geom::Point2;
use crate::spline::ControlPolygon;
use crate::timescale::{time_scale, VehicleLimits};
use crate::track::{mpc_solve, MpcReference, MpcWeights, UnicycleState};
use crate::trajopt::{FootprintSpec, ObjectiveWeights, Problem, SpeedParams};

/// Central-difference step used by [`gradcheck`].
pub const GRADCHECK_STEP: f64 = 1e-5;
/// Largest accepted normwise relative gradient error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckCase {
    pub control_points: usize,
    pub value: f64,
    pub grad_norm: f64,
    /// `‖g − g_fd‖ / ‖g_fd‖`.
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub cases: Vec<GradcheckCase>,
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Smooth random bumpiness: a squashed sum of Gaussians around the segment
/// from the origin to `(10, 0)`.
pub fn random_bump_field(rng: &mut ChaCha8Rng) -> SquashedField<GaussianBumpField> {
    let n = rng.gen_range(3..=6);
    let bumps = (0..n)
        .map(|_| GaussianBump {
            center: Point2::new(rng.gen_range(0.0..10.0), rng.gen_range(-2.0..2.0)),
            amplitude: rng.gen_range(-3.0..4.0),
            sigma: rng.gen_range(0.5..2.0),
        })
        .collect();
    squash_to_unit(gaussian_bump_field(bumps).expect("positive widths"))
}

/// Random wavy polygon with `m` points from the origin to `(10, 0)`.
pub fn random_polygon(rng: &mut ChaCha8Rng, m: usize) -> Vec<Point2> {
    (0..m)
        .map(|i| {
            let s = i as f64 / (m - 1) as f64;
            let jitter = if i == 0 || i == m - 1 {
                0.0
            } else {
                rng.gen_range(-0.8..0.8)
            };
            Point2::new(10.0 * s + 0.2 * jitter, jitter)
        })
        .collect()
}

/// Compare the analytic objective gradient with central differences on ten
/// seeded random configurations.
pub fn gradcheck(seed: u64) -> GradcheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    for _ in 0..10 {
        let field = random_bump_field(&mut rng);
        let m = rng.gen_range(5..=12);
        let pts = random_polygon(&mut rng, m);
        let weights = ObjectiveWeights {
            lambda_b: rng.gen_range(0.5..4.0),
            lambda_s: rng.gen_range(0.1..1.0),
            lambda_kappa: rng.gen_range(0.01..0.2),
        };
        let problem = Problem::new(
            &field,
            weights,
            SpeedParams::default(),
            FootprintSpec::default(),
            64,
        );
        let ctrl = ControlPolygon::new(pts.clone()).expect("valid polygon");
        let eval = problem.evaluate(&ctrl).expect("evaluates");

        let mut diff_sq = 0.0;
        let mut fd_sq = 0.0;
        for k in 1..m - 1 {
            for axis in 0..2 {
                let at = |delta: f64| {
                    let mut p = pts.clone();
                    if axis == 0 {
                        p[k].x += delta;
                    } else {
                        p[k].y += delta;
                    }
                    problem
                        .value(&ControlPolygon::new(p).expect("valid polygon"))
                        .expect("evaluates")
                };
                let fd = (at(GRADCHECK_STEP) - at(-GRADCHECK_STEP)) / (2.0 * GRADCHECK_STEP);
                let g = eval.gradient[k - 1];
                let an = if axis == 0 { g.x } else { g.y };
                diff_sq += (an - fd).powi(2);
                fd_sq += fd * fd;
            }
        }
        let rel_error = diff_sq.sqrt() / fd_sq.sqrt().max(1e-12);
        cases.push(GradcheckCase {
            control_points: m,
            value: eval.value,
            grad_norm: eval.gradient_norm(),
            rel_error,
        });
    }
    let max_rel_error = cases.iter().map(|c| c.rel_error).fold(0.0, f64::max);
    GradcheckReport {
        cases,
        max_rel_error,
        passed: max_rel_error < GRADCHECK_TOLERANCE,
    }
}

/// Median wall-clock time per stage, milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchReport {
    /// Objective and gradient for a 30-point polygon, 64 dense samples,
    /// 3×3 footprint.
    pub objective_ms: f64,
    /// A* corner to corner on a random 100×100 grid.
    pub astar_ms: f64,
    /// One MPC solve with a 20-step horizon.
    pub mpc_ms: f64,
    pub repeats: usize,
}

fn median_ms(repeats: usize, mut f: impl FnMut()) -> f64 {
    f();
    let mut times: Vec<f64> = (0..repeats)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[times.len() / 2]
}

/// Time the three per-cycle stages.
pub fn bench(seed: u64, repeats: usize) -> BenchReport {
    let repeats = repeats.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let field = random_bump_field(&mut rng);
    let ctrl = ControlPolygon::new(random_polygon(&mut rng, 30)).expect("valid polygon");
    let problem = Problem::new(
        &field,
        ObjectiveWeights::default(),
        SpeedParams::default(),
        FootprintSpec::default(),
        64,
    );
    let objective_ms = median_ms(repeats, || {
        std::hint::black_box(problem.evaluate(&ctrl).expect("evaluates"));
    });

    let n = 100;
    let costs: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..0.9)).collect();
    let grid = CostGrid::new(Point2::ZERO, 0.1, n, n, costs).expect("valid grid");
    let planner = AStar::new(&grid, AStarConfig::default());
    let (a, b) = (Point2::new(0.0, 0.0), Point2::new(9.9, 9.9));
    let astar_ms = median_ms(repeats, || {
        std::hint::black_box(planner.plan(a, b).expect("open grid"));
    });

    let limits = VehicleLimits::default();
    let path = crate::spline::interpolate(&ctrl, 200).expect("interpolates");
    let traj = time_scale(
        &path,
        &vec![0.1; path.len()],
        &limits,
        &SpeedParams::default(),
        (0.0, 0.0),
    )
    .expect("time-scales");
    let weights = MpcWeights::default();
    let reference = MpcReference::from_trajectory(&traj, 1.0, weights.horizon, weights.dt);
    let s0 = reference.states[0];
    let s0 = UnicycleState::new(s0.x + 0.3, s0.y - 0.3, s0.theta + 0.2);
    let mpc_ms = median_ms(repeats, || {
        std::hint::black_box(mpc_solve(s0, &reference, &weights, &limits, None).expect("solves"));
    });

    BenchReport {
        objective_ms,
        astar_ms,
        mpc_ms,
        repeats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradcheck_is_deterministic() {
        let a = gradcheck(3);
        assert_eq!(a, gradcheck(3));
        assert_eq!(a.cases.len(), 10);
    }
}
