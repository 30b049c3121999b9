//! Run a small suite (every method on the flat scenario) and print the
//! mean ± std table.

use trail::harness::{run_suite, Method, SuiteConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("trail_suite_example");
    let cfg = SuiteConfig {
        scenarios: vec![concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/flat.json").into()],
        methods: Method::ALL.to_vec(),
        trials: Some(2),
        seed: Some(11),
        seeds: None,
        out: out.clone(),
        base_dir: Default::default(),
    };
    let result = run_suite(&cfg)?;
    for s in &result.summaries {
        let fmt = |m: Option<trail::harness::MetricStat>| {
            m.map_or("-".to_string(), |m| format!("{:.2} ± {:.2}", m.mean, m.std))
        };
        println!(
            "{:<16} success {}/{}  time {:<14} length {:<14} az max {}",
            s.method.to_string(),
            s.successes,
            s.trials,
            fmt(s.time),
            fmt(s.length),
            fmt(s.az_max)
        );
    }
    println!("tables written under {}", out.display());
    Ok(())
}
