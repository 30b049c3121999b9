//! Geometric cost map from an elevation field, then A* around a ridge.

use trail::astar::{AStar, AStarConfig};
use trail::costmap::{build_geometric_costmap, GeomCostParams};
use trail::field::{BoxStepField, DiskField, SumField};
use trail::{Bounds, Point2};

use std::sync::Arc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let region = Bounds::new(0.0, 10.0, -4.0, 4.0);
    let terrain = SumField::new(vec![
        Arc::new(BoxStepField::new(
            Bounds::new(4.8, 5.2, -5.0, 2.0),
            0.8,
            0.05,
        )?),
        Arc::new(DiskField::new(Point2::new(7.5, 2.5), 0.6, 1.0, 0.05)?),
    ]);
    let grid = build_geometric_costmap(&terrain, region, &GeomCostParams::default())?.inflate(0.25);
    println!(
        "{}x{} cells at {} m, cost range [{:.2}, {:.2}]",
        grid.rows(),
        grid.cols(),
        grid.resolution(),
        grid.min_cost(),
        grid.max_cost()
    );

    let planner = AStar::new(&grid, AStarConfig::default());
    let trace = planner.plan_traced(Point2::new(1.0, -2.0), Point2::new(9.0, -2.0))?;
    let path = &trace.path;
    let length: f64 = path.points.windows(2).map(|w| w[0].distance(w[1])).sum();
    println!(
        "path: {} cells, {:.2} m, cost {:.3}, {} expansions",
        path.len(),
        length,
        path.cost,
        trace.expanded.len()
    );
    for p in path.downsample(8)? {
        println!("  ({:5.2}, {:5.2})", p.x, p.y);
    }
    Ok(())
}
