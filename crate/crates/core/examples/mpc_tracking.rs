//! Track a time-scaled S-curve with the MPC from a displaced start pose.

use trail::field::ConstantField;
use trail::spline::DensePath;
use trail::timescale::{time_scale, VehicleLimits};
use trail::track::{Controller, MpcTracker, MpcWeights, Plant, UnicycleState};
use trail::trajopt::SpeedParams;
use trail::Point2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pts = (0..300).map(|i| {
        let s = i as f64 * 0.05;
        Point2::new(s, 0.8 * (0.4 * s).sin())
    });
    let path = DensePath::from_points(pts.collect());
    let limits = VehicleLimits::default();
    let traj = time_scale(
        &path,
        &vec![0.1; path.len()],
        &limits,
        &SpeedParams::default(),
        (0.0, 0.0),
    )?;

    let flat = ConstantField::new(0.1);
    let mut plant = Plant::new(&flat, limits, 0.05, UnicycleState::new(0.0, -0.5, 0.3));
    let mut mpc = MpcTracker::new(MpcWeights::default(), limits);
    let steps = ((traj.duration() + 1.0) / 0.05) as usize;
    for k in 0..steps {
        let t = k as f64 * 0.05;
        let u = mpc.control(t, plant.state, &traj);
        plant.step(u);
        if k % 40 == 0 {
            let err = plant
                .state
                .position()
                .distance(traj.sample(t + 0.05).position);
            println!(
                "t={:5.2} v={:.2} omega={:+.2} error {:.3} m",
                t, u.v, u.omega, err
            );
        }
    }
    let end = *traj.points.last().unwrap();
    println!(
        "final distance to path end: {:.3} m",
        plant.state.position().distance(end)
    );
    Ok(())
}
