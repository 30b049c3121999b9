//! Acceptance gate: every criterion runs at its stated tolerance and runtime
//! budget and prints one PASS/FAIL line. Runs without the libtest harness so
//! the report is always visible; exits nonzero if any criterion fails.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trail::astar::{AStar, AStarConfig, AStarError};
use trail::costmap::{CostGrid, GridIndex};
use trail::harness::{
    bench, gradcheck, random_bump_field, random_polygon, run_trial, windowed_rms, Method,
    ScenarioConfig, TrialContext, GRADCHECK_TOLERANCE,
};
use trail::mppi::{mppi_step, softmax_weights, MppiConfig, MppiController, MppiVariant};
use trail::spline::{interpolate, DensePath};
use trail::timescale::{time_scale, VehicleLimits};
use trail::track::{
    mpc_solve, step_dynamics, ControlInput, MpcReference, MpcWeights, RolloutLog, UnicycleState,
};
use trail::trajopt::{
    optimize, path_bumpiness, smin, FootprintSpec, ObjectiveWeights, OptimizerConfig, Problem,
    SpeedParams,
};
use trail::{Bounds, Point2};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scenario(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(format!(
        "{}/scenarios/{name}.json",
        env!("CARGO_MANIFEST_DIR")
    ))
    .expect("fixture loads")
}

// 1 ---------------------------------------------------------------------------

fn gradient_exactness() -> Outcome {
    let rep = gradcheck(2024);
    check(
        rep.cases.len() == 10 && rep.max_rel_error < GRADCHECK_TOLERANCE,
        format!(
            "{} configs, max relative error {:.3e} (< 1e-4)",
            rep.cases.len(),
            rep.max_rel_error
        ),
    )
}

// 2 ---------------------------------------------------------------------------

const LETHAL: f64 = 0.95;

/// Independent graph: 8-connected, lethal cells removed, no corner cutting.
fn oracle_neighbors(grid: &CostGrid, u: GridIndex) -> Vec<(GridIndex, f64)> {
    let free = |r: i64, c: i64| {
        r >= 0
            && c >= 0
            && (r as usize) < grid.rows()
            && (c as usize) < grid.cols()
            && grid.get(GridIndex::new(r as usize, c as usize)) < LETHAL
    };
    let mut out = Vec::new();
    for dr in -1i64..=1 {
        for dc in -1i64..=1 {
            if dr == 0 && dc == 0 {
                continue;
            }
            let (r, c) = (u.row as i64 + dr, u.col as i64 + dc);
            if !free(r, c) {
                continue;
            }
            if dr != 0 && dc != 0 && !(free(u.row as i64, c) && free(r, u.col as i64)) {
                continue;
            }
            let v = GridIndex::new(r as usize, c as usize);
            let len = ((dr * dr + dc * dc) as f64).sqrt() * grid.resolution();
            let w = (0.5 * (grid.get(u) + grid.get(v)) + AStarConfig::default().cost_floor) * len;
            out.push((v, w));
        }
    }
    out
}

fn dijkstra(grid: &CostGrid, source: GridIndex) -> Vec<f64> {
    let cols = grid.cols();
    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut heap = BinaryHeap::new();
    dist[source.row * cols + source.col] = 0.0;
    heap.push(Reverse((ordered(0.0), source.row * cols + source.col)));
    while let Some(Reverse((d, k))) = heap.pop() {
        let d = f64::from_bits(d);
        if d > dist[k] {
            continue;
        }
        for (v, w) in oracle_neighbors(grid, GridIndex::new(k / cols, k % cols)) {
            let kv = v.row * cols + v.col;
            if d + w < dist[kv] {
                dist[kv] = d + w;
                heap.push(Reverse((ordered(d + w), kv)));
            }
        }
    }
    dist
}

/// Nonnegative floats order like their bit patterns.
fn ordered(x: f64) -> u64 {
    x.to_bits()
}

fn astar_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (n, res) = (50, 0.5);
    let mut solved = 0;
    let mut blocked = 0;
    for trial in 0..100 {
        let lethal_p = rng.gen_range(0.0..0.3);
        let mut cost: Vec<f64> = (0..n * n)
            .map(|_| {
                if rng.gen_bool(lethal_p) {
                    1.0
                } else {
                    rng.gen_range(0.0..0.9)
                }
            })
            .collect();
        let (s, g) = (
            GridIndex::new(0, 0),
            GridIndex::new(n - 1, rng.gen_range(0..n)),
        );
        cost[0] = 0.1;
        cost[g.row * n + g.col] = 0.1;
        let grid = CostGrid::new(Point2::ZERO, res, n, n, cost).unwrap();
        let astar = AStar::new(&grid, AStarConfig::default());
        let from_start = dijkstra(&grid, s);
        let truth = from_start[g.row * n + g.col];
        match astar.plan(grid.cell_center(s), grid.cell_center(g)) {
            Ok(path) => {
                if path.cost != truth {
                    return Err(format!(
                        "grid {trial}: A* cost {} != Dijkstra {}",
                        path.cost, truth
                    ));
                }
                solved += 1;
            }
            Err(AStarError::NoPath { .. }) if truth.is_infinite() => blocked += 1,
            Err(e) => {
                return Err(format!(
                    "grid {trial}: A* failed ({e}) with oracle cost {truth}"
                ))
            }
        }
        let to_goal = dijkstra(&grid, g);
        for r in 0..n {
            for c in 0..n {
                let idx = GridIndex::new(r, c);
                let h = astar.heuristic(idx, g);
                if h > to_goal[r * n + c] {
                    return Err(format!(
                        "grid {trial}: h({r},{c}) = {h} exceeds cost-to-go {}",
                        to_goal[r * n + c]
                    ));
                }
            }
        }
    }
    Ok(format!("100 grids ({solved} solved, {blocked} blocked): costs equal, heuristic admissible everywhere"))
}

// 3 ---------------------------------------------------------------------------

fn smin_limit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (a, b) = (rng.gen_range(0.0..=10.0), rng.gen_range(0.0..=10.0));
        let s = smin(a, b, 1e-4);
        if s > a.min(b) {
            return Err(format!("smin({a}, {b}) = {s} exceeds min"));
        }
        worst = worst.max((s - a.min(b)).abs());
    }
    check(
        worst < 1e-3,
        format!("max |smin - min| = {worst:.3e} (< 1e-3), smin <= min on all 1000 pairs"),
    )
}

// 4 ---------------------------------------------------------------------------

const STRIP_SCENARIO: &str = r#"{
    "schema": "trail-scenario/1",
    "name": "strip",
    "region": {"x_min": 0, "x_max": 40, "y_min": -3, "y_max": 3},
    "elevation": [{"type": "constant", "value": 0}],
    "bumpiness": {"primitives": [
        {"type": "constant", "value": -2.1972245773362196},
        {"type": "box_step", "rect": {"x_min": 17, "x_max": 23, "y_min": -10, "y_max": 10},
         "height": 3.58351893845611, "edge": 0.05}
    ]},
    "start": {"x": 1, "y": 0},
    "goal": {"x": 39, "y": 0},
    "limits": {"v_max": 3.0},
    "trail": {"speed": {"alpha": 2, "w_time": 1.0, "w_bump": 1.0}}
}"#;

fn speed_adaptation() -> Outcome {
    let sc = ScenarioConfig::from_json_str(STRIP_SCENARIO).map_err(|e| e.to_string())?;
    let ctx = TrialContext::new(&sc).map_err(|e| e.to_string())?;
    let plan = ctx
        .plan_trail(sc.trial_start(0), 0.0)
        .map_err(|e| e.to_string())?;
    let traj = &plan.trajectory;
    let path = DensePath::from_points(traj.points.clone());
    let bumps = path_bumpiness(&*ctx.terrain.bumpiness, &path, &sc.trail.footprint);
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    for (i, &b) in bumps.iter().enumerate() {
        let x = traj.points[i].x;
        if (b - 0.8).abs() < 0.01 {
            inside.push(traj.v[i]);
        } else if (b - 0.1).abs() < 0.01 && !(16.0..24.0).contains(&x) {
            outside.push(traj.v[i]);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    if inside.is_empty() || outside.is_empty() {
        return Err("path never crossed the strip".into());
    }
    let ratio = mean(&inside) / mean(&outside);
    check(
        ratio < 0.6,
        format!(
            "mean speed {:.3} in strip vs {:.3} outside, ratio {ratio:.3} (< 0.60)",
            mean(&inside),
            mean(&outside)
        ),
    )
}

// 5 ---------------------------------------------------------------------------

fn max_az(log: &RolloutLog) -> f64 {
    let az: Vec<f64> = log.rows.iter().map(|r| r.az_proxy).collect();
    windowed_rms(&az, 2).into_iter().fold(0.0, f64::max)
}

fn grassland_behavior() -> Outcome {
    let sc = scenario("grassland");
    let ctx = TrialContext::new(&sc).map_err(|e| e.to_string())?;
    let straight = Point2::new(sc.start.x, sc.start.y).distance(sc.goal);
    let geo_term = Method::Mppi(MppiVariant::GeoTerm);
    let mut lines = Vec::new();
    let mut ok = true;
    for seed in sc.seed..sc.seed + 3 {
        let t = run_trial(&ctx, Method::Trail, seed).map_err(|e| e.to_string())?;
        let m = run_trial(&ctx, geo_term, seed).map_err(|e| e.to_string())?;
        let (at, am) = (max_az(&t.log), max_az(&m.log));
        let len = t.metrics.length.unwrap_or(f64::INFINITY);
        ok &= t.metrics.success && len <= 1.25 * straight && at <= 0.5 * am;
        lines.push(format!(
            "seed {seed}: success {} length {:.2}/{:.2} az {at:.3} vs {am:.3}",
            t.metrics.success,
            len,
            1.25 * straight
        ));
    }
    check(ok, lines.join("; "))
}

// 6 ---------------------------------------------------------------------------

fn timescale_feasibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let lim = VehicleLimits::default();
    let speed = SpeedParams::default();
    let fp = FootprintSpec::default();
    let mut samples = 0;
    for case in 0..50 {
        let field = random_bump_field(&mut rng);
        let m = rng.gen_range(5..=15);
        let initial = random_polygon(&mut rng, m);
        let problem = Problem::new(&field, ObjectiveWeights::default(), speed, fp, 64);
        let cfg = OptimizerConfig {
            iterations: 20,
            bounds: Bounds::new(-1.0, 11.0, -4.0, 4.0),
            ..Default::default()
        };
        let res = optimize(&initial, &problem, &cfg).map_err(|e| e.to_string())?;
        let path = interpolate(&res.polygon, problem.dense_count(&res.polygon))
            .map_err(|e| e.to_string())?;
        let bumps = path_bumpiness(&field, &path, &fp);
        let tr = time_scale(&path, &bumps, &lim, &speed, (0.0, 0.0)).map_err(|e| e.to_string())?;
        for i in 0..tr.len() {
            let (v, k) = (tr.v[i], path.curvatures[i]);
            if v > lim.v_max + 1e-9 || v * v * k.abs() > lim.a_lat_max + 1e-6 {
                return Err(format!("path {case} sample {i}: v {v} kappa {k}"));
            }
            let vk = v * k;
            if vk > lim.omega_min && vk < lim.omega_max && (tr.omega[i] - vk).abs() > 1e-9 {
                return Err(format!(
                    "path {case} sample {i}: omega {} != v*kappa {vk}",
                    tr.omega[i]
                ));
            }
            if i + 1 < tr.len() {
                let a = (tr.v[i + 1].powi(2) - v * v) / (2.0 * path.seg_lengths[i]);
                if a > lim.a_acc + 1e-6 || a < -lim.a_dec - 1e-6 {
                    return Err(format!("path {case} segment {i}: acceleration {a}"));
                }
            }
            samples += 1;
        }
    }
    Ok(format!("50 optimized paths, {samples} samples within speed, lateral, tangential and yaw-rate limits"))
}

// 7 ---------------------------------------------------------------------------

fn trapezoid() -> Outcome {
    let path = DensePath::from_points(
        (0..=1000)
            .map(|i| Point2::new(i as f64 * 0.01, 0.0))
            .collect(),
    );
    let lim = VehicleLimits {
        v_max: 2.0,
        a_acc: 1.0,
        a_dec: 1.0,
        ..Default::default()
    };
    let speed = SpeedParams {
        v_max: 2.0,
        ..Default::default()
    };
    let tr = time_scale(&path, &vec![0.0; path.len()], &lim, &speed, (0.0, 0.0))
        .map_err(|e| e.to_string())?;
    let err = (tr.duration() - 7.0).abs() / 7.0;
    check(
        err <= 0.02,
        format!(
            "total time {:.4} s (7.0 s within 2%, error {:.3}%)",
            tr.duration(),
            err * 100.0
        ),
    )
}

// 8 ---------------------------------------------------------------------------

fn straight_reference(t0: f64, w: &MpcWeights, speed: f64) -> MpcReference {
    MpcReference {
        states: (0..=w.horizon)
            .map(|k| UnicycleState::new(speed * (t0 + k as f64 * w.dt), 0.0, 0.0))
            .collect(),
        inputs: vec![ControlInput::new(speed, 0.0); w.horizon],
    }
}

fn mpc_tracking() -> Outcome {
    let w = MpcWeights::default();
    let lim = VehicleLimits::default();
    let speed = 1.0;
    let mut s = UnicycleState::new(0.0, 0.5, 0.0);
    let mut warm: Option<Vec<ControlInput>> = None;
    let mut recovered = None;
    for k in 0..30 {
        let reference = straight_reference(k as f64 * w.dt, &w, speed);
        let sol = mpc_solve(s, &reference, &w, &lim, warm.as_deref()).map_err(|e| e.to_string())?;
        let mut shifted = sol.inputs[1..].to_vec();
        shifted.push(*sol.inputs.last().unwrap());
        warm = Some(shifted);
        s = step_dynamics(s, sol.input, w.dt);
        let err = s
            .position()
            .distance(Point2::new(speed * (k + 1) as f64 * w.dt, 0.0));
        if err < 0.05 && recovered.is_none() {
            recovered = Some((k + 1, err));
        }
    }
    let Some((steps, err)) = recovered else {
        return Err("lateral offset not recovered within 30 steps".into());
    };
    let on_ref = straight_reference(0.0, &w, speed);
    let sol = mpc_solve(on_ref.states[0], &on_ref, &w, &lim, None).map_err(|e| e.to_string())?;
    let du = (sol.input.v - speed).abs().max(sol.input.omega.abs());
    check(
        du < 1e-4,
        format!("0.5 m offset below 0.05 m after {steps} steps (error {err:.4}); zero-residual |u - u_ref| = {du:.2e}"),
    )
}

// 9 ---------------------------------------------------------------------------

fn mppi_sanity() -> Outcome {
    let grid = CostGrid::filled(Bounds::new(0.0, 12.0, -4.0, 4.0), 0.25, 0.0).unwrap();
    let lim = VehicleLimits::default();
    let goal = Point2::new(10.0, 2.0);
    let s0 = UnicycleState::new(1.0, 0.0, 0.0);

    let sharp = MppiConfig {
        samples: 1024,
        temperature: 1e-6,
        ..Default::default()
    };
    let nominal = vec![ControlInput::new(0.5, 0.0); sharp.horizon];
    let step = mppi_step(
        s0,
        &nominal,
        &grid,
        goal,
        MppiVariant::Geo,
        &sharp,
        &lim,
        None,
        99,
    )
    .map_err(|e| e.to_string())?;
    let best = &step.samples[step.best_index()];
    let dev = step
        .sequence
        .iter()
        .zip(best)
        .map(|(a, b)| (a.v - b.v).abs().max((a.omega - b.omega).abs()))
        .fold(0.0, f64::max);
    if dev > 1e-6 {
        return Err(format!(
            "lambda=1e-6 sequence deviates from the best sample by {dev:.2e}"
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_sum: f64 = 0.0;
    for _ in 0..100 {
        let costs: Vec<f64> = (0..1024).map(|_| rng.gen_range(0.0..500.0)).collect();
        let w = softmax_weights(&costs, rng.gen_range(0.01..10.0));
        if w.iter().any(|x| *x < 0.0) {
            return Err("negative softmax weight".into());
        }
        worst_sum = worst_sum.max((w.iter().sum::<f64>() - 1.0).abs());
    }
    if worst_sum > 1e-12 {
        return Err(format!("softmax weights sum off by {worst_sum:.2e}"));
    }

    let cfg = MppiConfig {
        samples: 1024,
        ..Default::default()
    };
    let mut ctl = MppiController::new(cfg, MppiVariant::Geo, lim, 5).map_err(|e| e.to_string())?;
    let mut s = s0;
    let mut t = 0.0;
    while s.position().distance(goal) > 0.5 && t < 60.0 {
        let u = ctl.step(s, &grid, goal, None).map_err(|e| e.to_string())?;
        s = step_dynamics(s, u, cfg.dt);
        t += cfg.dt;
    }
    check(
        s.position().distance(goal) <= 0.5,
        format!(
            "argmin deviation {dev:.1e}, softmax sum error {worst_sum:.1e}, goal reached in {t:.1} s with K=1024"
        ),
    )
}

// 10 --------------------------------------------------------------------------

fn determinism() -> Outcome {
    let mut sc = scenario("grassland");
    sc.sim.start_jitter = 0.3;
    let mut checked = Vec::new();
    for method in [Method::Trail, Method::Mppi(MppiVariant::Fused)] {
        let run = || -> Result<(String, Vec<u8>), String> {
            let ctx = TrialContext::new(&sc).map_err(|e| e.to_string())?;
            let out = run_trial(&ctx, method, 42).map_err(|e| e.to_string())?;
            let mut csv = Vec::new();
            out.log.write_csv(&mut csv).map_err(|e| e.to_string())?;
            Ok((serde_json::to_string(&out.metrics).unwrap(), csv))
        };
        let (a, b) = (run()?, run()?);
        if a != b {
            return Err(format!(
                "{method}: metrics or rollout differ between identical runs"
            ));
        }
        checked.push(format!("{method} {}", a.0.len()));
    }
    Ok(format!(
        "byte-identical metrics JSON and rollout CSV for trail and mppi-fused ({})",
        checked.join(", ")
    ))
}

// 11 --------------------------------------------------------------------------

fn performance() -> Outcome {
    let r = bench(11, 20);
    check(
        r.objective_ms <= 20.0 && r.astar_ms <= 20.0 && r.mpc_ms <= 50.0,
        format!(
            "objective+gradient {:.3} ms (<= 20), A* {:.3} ms (<= 20), MPC {:.3} ms (<= 50)",
            r.objective_ms, r.astar_ms, r.mpc_ms
        ),
    )
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 11] = [
        ("gradient exactness", 10, gradient_exactness),
        ("A* optimality and admissibility", 30, astar_optimality),
        ("smin limit", 1, smin_limit),
        ("speed adaptation", 5, speed_adaptation),
        ("grassland analog", 120, grassland_behavior),
        ("time-scaling feasibility", 30, timescale_feasibility),
        ("trapezoid oracle", 1, trapezoid),
        ("MPC tracking", 10, mpc_tracking),
        ("MPPI sanity", 60, mppi_sanity),
        ("determinism", 60, determinism),
        ("performance envelope", 60, performance),
    ];
    // `cargo test -- <filter>` runs only matching criteria.
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let in_budget = took <= Duration::from_secs(*budget);
        let (pass, detail) = match result {
            Ok(d) => (in_budget, d),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {}  [{:.2} s of {} s] {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget,
            detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
