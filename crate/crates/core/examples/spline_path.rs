//! Centripetal Catmull-Rom interpolation of a control polygon: dense
//! arc-length samples, curvature, and the control-point Jacobian.

use trail::spline::{interpolate, interpolate_with_jacobian, path_jacobian_check, ControlPolygon};
use trail::Point2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Eight points on a radius-3 circle arc.
    let ctrl = ControlPolygon::new(
        (0..8)
            .map(|i| {
                let a = i as f64 * 0.3;
                Point2::new(3.0 * a.cos(), 3.0 * a.sin())
            })
            .collect(),
    )?;
    let path = interpolate(&ctrl, 40)?;
    let spread = path.seg_lengths.iter().copied().fold(0.0, f64::max)
        - path
            .seg_lengths
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
    println!(
        "{} samples over {:.4} m (segment spread {:.2e})",
        path.len(),
        path.total_length(),
        spread
    );
    println!("arc length of the true circle: {:.4} m", 3.0 * 2.1);
    for i in (0..path.len()).step_by(8) {
        println!(
            "  s{i:02}: ({:6.3}, {:6.3}) kappa {:.4}",
            path.points[i].x, path.points[i].y, path.curvatures[i]
        );
    }

    let (_, jac) = interpolate_with_jacobian(&ctrl, 40)?;
    let b = jac.block(20, 3);
    println!(
        "d p_20 / d c_3 = [[{:.3}, {:.3}], [{:.3}, {:.3}]]",
        b[0][0], b[0][1], b[1][0], b[1][1]
    );
    let check = path_jacobian_check(&ctrl, 40)?;
    println!(
        "Jacobian vs finite differences: max relative error {:.2e}",
        check.max_rel_error
    );
    Ok(())
}
