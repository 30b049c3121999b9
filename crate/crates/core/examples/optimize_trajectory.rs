//! Bend a straight initial path around a bumpy patch by gradient descent on
//! the traversal objective, then write the optimizer trace.

use trail::field::{gaussian_bump_field, squash_to_unit, ConstantField, GaussianBump, SumField};
use trail::trajopt::{
    optimize, write_trace_csv, FootprintSpec, ObjectiveWeights, OptimizerConfig, Problem,
    SpeedParams,
};
use trail::{Bounds, Point2};

use std::sync::Arc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bump = squash_to_unit(SumField::new(vec![
        Arc::new(ConstantField::new(-2.5)),
        Arc::new(gaussian_bump_field(vec![GaussianBump {
            center: Point2::new(5.0, -0.3),
            amplitude: 4.5,
            sigma: 1.0,
        }])?),
    ]));
    let initial: Vec<Point2> = (0..11).map(|i| Point2::new(i as f64, 0.0)).collect();
    let problem = Problem::new(
        &bump,
        ObjectiveWeights::default(),
        SpeedParams::default(),
        FootprintSpec::default(),
        64,
    );
    let cfg = OptimizerConfig {
        iterations: 100,
        bounds: Bounds::new(0.0, 10.0, -3.0, 3.0),
        ..Default::default()
    };
    let result = optimize(&initial, &problem, &cfg)?;

    println!(
        "J: {:.4} -> {:.4} (best at iteration {})",
        result.initial_value, result.final_value, result.best_iteration
    );
    for p in result.polygon.points() {
        println!("  ({:5.2}, {:+.3})", p.x, p.y);
    }
    let first = &result.trace[0].terms;
    let last = &result.trace[result.best_iteration].terms;
    println!(
        "time term {:.3} -> {:.3}, bump term {:.3} -> {:.3}",
        first.time, last.time, first.bump, last.bump
    );

    let out = std::env::temp_dir().join("trail_optimizer_trace.csv");
    write_trace_csv(&result.trace, std::fs::File::create(&out)?)?;
    println!("trace written to {}", out.display());
    Ok(())
}
