//! Build elevation and bumpiness fields from analytic primitives and a grid,
//! then query values and gradients.

use std::sync::Arc;

use trail::field::{
    gaussian_bump_field, squash_to_unit, BoundsPolicy, BoxStepField, ConstantField, GaussianBump,
    GriddedField, Interpolation, SumField, TerrainField,
};
use trail::{Bounds, Point2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Bumpiness is built in logit space and squashed into (0, 1).
    let logits = SumField::new(vec![
        Arc::new(ConstantField::new(-2.2)),
        Arc::new(BoxStepField::new(
            Bounds::new(4.0, 6.0, -5.0, 5.0),
            3.6,
            0.2,
        )?),
    ]);
    let bump = squash_to_unit(logits);
    for x in [2.0, 4.0, 5.0, 8.0] {
        let s = bump.eval(Point2::new(x, 0.0));
        println!(
            "bumpiness at x={x:>4}: {:.3}  d/dx {:+.3}",
            s.value, s.gradient.x
        );
    }

    let hill = gaussian_bump_field(vec![GaussianBump {
        center: Point2::new(0.0, 0.0),
        amplitude: 0.5,
        sigma: 1.0,
    }])?;
    let (n, res) = (41, 0.1);
    let origin = Point2::new(-2.0, -2.0);
    let values = (0..n * n)
        .map(|i| {
            hill.eval(origin + Point2::new((i % n) as f64, (i / n) as f64) * res)
                .value
        })
        .collect();
    let grid = GriddedField::new(origin, res, n, n, values, Interpolation::Bicubic)?;

    let p = Point2::new(0.33, -0.71);
    let exact = hill.eval(p);
    let approx = grid.query(p)?;
    println!(
        "analytic elevation {:.6} gradient ({:.5}, {:.5})",
        exact.value, exact.gradient.x, exact.gradient.y
    );
    println!(
        "bicubic  elevation {:.6} gradient ({:.5}, {:.5})",
        approx.value, approx.gradient.x, approx.gradient.y
    );
    let outside = Point2::new(5.0, 0.0);
    let clamped = grid.query(outside)?;
    println!(
        "clamped outside query {:.6} gradient x {:.1}",
        clamped.value, clamped.gradient.x
    );
    if let Err(e) = grid.with_policy(BoundsPolicy::Strict).query(outside) {
        println!("strict outside query: {e}");
    }
    Ok(())
}
