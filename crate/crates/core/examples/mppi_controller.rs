//! Drive to a goal past a lethal block with the MPPI controller.

use trail::costmap::{CostGrid, GridIndex};
use trail::mppi::{MppiConfig, MppiController, MppiVariant};
use trail::timescale::VehicleLimits;
use trail::track::{step_dynamics, UnicycleState};
use trail::{Bounds, Point2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut grid = CostGrid::filled(Bounds::new(0.0, 10.0, -3.0, 3.0), 0.25, 0.05)?;
    for r in 0..grid.rows() {
        for c in 0..grid.cols() {
            let p = grid.cell_center(GridIndex::new(r, c));
            if (4.0..5.0).contains(&p.x) && (-1.0..1.0).contains(&p.y) {
                grid.set(GridIndex::new(r, c), 1.0);
            }
        }
    }
    let goal = Point2::new(9.0, 0.0);
    let limits = VehicleLimits::default();
    let cfg = MppiConfig {
        samples: 1024,
        ..Default::default()
    };
    let mut ctl = MppiController::new(cfg, MppiVariant::Geo, limits, 7)?;

    let mut s = UnicycleState::new(1.0, 0.0, 0.0);
    let mut closest_to_block = f64::INFINITY;
    for k in 0..300 {
        if s.position().distance(goal) < 0.5 {
            println!("goal reached after {:.1} s", k as f64 * cfg.dt);
            break;
        }
        let u = ctl.step(s, &grid, goal, None)?;
        s = step_dynamics(s, u, cfg.dt);
        let p = s.position();
        if (4.0..5.0).contains(&p.x) {
            closest_to_block = closest_to_block.min(1.0 - p.y.abs());
        }
        if k % 10 == 0 {
            println!(
                "t={:4.1} ({:5.2}, {:+.2}) v={:.2}",
                k as f64 * cfg.dt,
                p.x,
                p.y,
                u.v
            );
        }
    }
    println!("clearance past the block: {:.2} m", -closest_to_block);
    Ok(())
}
