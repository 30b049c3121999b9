//! Time-scale a straight path crossing a bumpy strip: the vehicle slows in
//! the strip and speeds back up after it.

use trail::spline::DensePath;
use trail::timescale::{time_scale, VehicleLimits};
use trail::trajopt::SpeedParams;
use trail::Point2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = DensePath::from_points(
        (0..=200)
            .map(|i| Point2::new(i as f64 * 0.1, 0.0))
            .collect(),
    );
    let bumps: Vec<f64> = path
        .points
        .iter()
        .map(|p| if (8.0..12.0).contains(&p.x) { 0.8 } else { 0.1 })
        .collect();
    let limits = VehicleLimits::default();
    let traj = time_scale(&path, &bumps, &limits, &SpeedParams::default(), (0.0, 0.0))?;

    println!(
        "duration {:.2} s over {:.1} m",
        traj.duration(),
        path.total_length()
    );
    for i in (0..traj.len()).step_by(10) {
        let bar = "#".repeat((traj.v[i] * 20.0).round() as usize);
        println!(
            "x={:5.1} b={:.1} t={:6.2} v={:.2} {bar}",
            traj.points[i].x, bumps[i], traj.t[i], traj.v[i]
        );
    }
    Ok(())
}
