use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trail::harness::{
    bench, gradcheck, run_suite, run_trials, trial_seeds, write_run_outputs, FailureReason,
    HarnessError, Method, ScenarioConfig, SuiteConfig, TrialContext, GRADCHECK_TOLERANCE,
};

#[derive(Parser)]
#[command(name = "trail", version, about = "Terrain-aware planning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method on one scenario.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        method: Method,
        /// Defaults to the scenario's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Defaults to the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run every scenario and method listed in a suite file.
    Suite {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the objective gradient against finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time the objective, A* and MPC stages.
    Bench {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        repeats: usize,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NO_PATH: u8 = 3;

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.3}"))
}

fn run(
    scenario: PathBuf,
    method: Method,
    trials: Option<usize>,
    seed: Option<u64>,
    out: PathBuf,
) -> Result<u8, HarnessError> {
    let sc = ScenarioConfig::load(&scenario)?;
    let ctx = TrialContext::new(&sc)?;
    let seeds = trial_seeds(seed.unwrap_or(sc.seed), trials.unwrap_or(sc.trials));
    let results = run_trials(&ctx, method, &seeds)?;
    let summary = write_run_outputs(&out, &ctx, method, &results)?;
    let mut no_path = false;
    for (rec, _) in &results {
        let m = &rec.metrics;
        no_path |= rec.failure == Some(FailureReason::NoPathAtStart);
        println!(
            "trial {} seed {}: success={} progress={:.3} time={} length={} az_rms_mean={} az_max={}{}",
            rec.trial,
            rec.seed,
            m.success,
            m.progress,
            fmt_opt(m.time),
            fmt_opt(m.length),
            fmt_opt(m.az_rms_mean),
            fmt_opt(m.az_max),
            rec.failure.map_or(String::new(), |f| format!(" failure={f:?}")),
        );
    }
    println!(
        "{method}: {}/{} succeeded; results in {}",
        summary.successes,
        summary.trials,
        out.display()
    );
    Ok(if no_path { EXIT_NO_PATH } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            method,
            trials,
            seed,
            out,
        } => run(scenario, method, trials, seed, out),
        Command::Suite { config } => SuiteConfig::load(&config).and_then(|cfg| {
            let res = run_suite(&cfg)?;
            for s in &res.summaries {
                println!(
                    "{} {}: success {}/{} time {} az_max {}",
                    s.scenario,
                    s.method,
                    s.successes,
                    s.trials,
                    s.time
                        .map_or("-".into(), |t| format!("{:.2}±{:.2}", t.mean, t.std)),
                    s.az_max
                        .map_or("-".into(), |t| format!("{:.3}±{:.3}", t.mean, t.std)),
                );
            }
            Ok(0)
        }),
        Command::Gradcheck { seed } => {
            let rep = gradcheck(seed);
            for (i, c) in rep.cases.iter().enumerate() {
                println!(
                    "case {i}: M={} J={:.4} |g|={:.4e} rel_err={:.3e}",
                    c.control_points, c.value, c.grad_norm, c.rel_error
                );
            }
            println!(
                "max relative error {:.3e} (tolerance {GRADCHECK_TOLERANCE:e}): {}",
                rep.max_rel_error,
                if rep.passed { "PASS" } else { "FAIL" }
            );
            Ok(if rep.passed { 0 } else { 1 })
        }
        Command::Bench { seed, repeats } => {
            let r = bench(seed, repeats);
            println!(
                "objective+gradient (30 pts, N=64, k=3): {:.3} ms",
                r.objective_ms
            );
            println!(
                "A* (100x100):                           {:.3} ms",
                r.astar_ms
            );
            println!("MPC solve (N=20):                       {:.3} ms", r.mpc_ms);
            println!("median of {} repeats", r.repeats);
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                HarnessError::ConfigInvalid(_) => EXIT_CONFIG,
                HarnessError::NoPath => EXIT_NO_PATH,
                _ => 1,
            })
        }
    }
}
