//! Closed-loop trials on the grassland scenario: the gradient-based pipeline
//! against a geometric MPPI baseline.

use trail::harness::{run_trial, Method, ScenarioConfig, TrialContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/grassland.json").to_string()
    });
    let scenario = ScenarioConfig::load(&path)?;
    let ctx = TrialContext::new(&scenario)?;
    println!("scenario {} from {path}", scenario.name);

    for method in [Method::Trail, "mppi-geo-term".parse()?] {
        let out = run_trial(&ctx, method, scenario.seed)?;
        let m = out.metrics;
        let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
        println!(
            "{method:>14}: success {} progress {:.2} time {} length {} az max {}",
            m.success,
            m.progress,
            show(m.time),
            show(m.length),
            show(m.az_max)
        );
        if let Some(plan) = &out.first_plan {
            let v = &plan.trajectory.v;
            let vmax = v.iter().copied().fold(0.0, f64::max);
            println!(
                "{:>14}  first plan: {} control points, {} samples, peak speed {vmax:.2}, {} replans",
                "",
                plan.control_points.len(),
                v.len(),
                out.replans
            );
        }
    }
    Ok(())
}
