//! Closed-loop trials: the gradient-based pipeline and the MPPI baselines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, RunMetrics};
use super::scenario::{ScenarioConfig, Terrain};
use super::HarnessError;
use crate::astar::{downsample_path, AStar, AStarError};
use crate::costmap::{blend_costmaps, build_geometric_costmap, rasterize_bumpiness, CostGrid};
use crate::geom::Point2;
use crate::mppi::{MppiController, MppiVariant, PathGuide};
use crate::spline::interpolate;
use crate::timescale::{max_feasible_start_speed, time_scale, Trajectory};
use crate::track::{Controller, MpcTracker, Plant, RolloutLog, UnicycleState};
use crate::trajopt::{optimize, path_bumpiness, Problem, SpeedParams, TraceRow};

/// Planner under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Method {
    Trail,
    Mppi(MppiVariant),
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Trail,
        Method::Mppi(MppiVariant::Geo),
        Method::Mppi(MppiVariant::GeoTerm),
        Method::Mppi(MppiVariant::Bump),
        Method::Mppi(MppiVariant::AStarBump),
        Method::Mppi(MppiVariant::Fused),
    ];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Trail => f.write_str("trail"),
            Method::Mppi(v) => write!(f, "mppi-{}", v.name()),
        }
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| HarnessError::ConfigInvalid(format!("unknown method {s:?}")))
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// Goal not reached before the time cap.
    TimeCap,
    /// No traversable path existed from the start pose.
    NoPathAtStart,
}

/// One replan of the gradient-based pipeline.
#[derive(Debug, Clone)]
pub struct Plan {
    pub astar_points: Vec<Point2>,
    pub control_points: Vec<Point2>,
    pub trajectory: Trajectory,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub metrics: RunMetrics,
    pub log: RolloutLog,
    pub failure: Option<FailureReason>,
    /// First plan of a gradient-based run (absent for MPPI).
    pub first_plan: Option<Plan>,
    pub replans: usize,
}

/// Maps and fields shared by every trial of a scenario.
pub struct TrialContext {
    pub scenario: ScenarioConfig,
    pub terrain: Terrain,
    /// Geometric cost map used by A* and the geometric MPPI variants.
    pub geometric: CostGrid,
    /// Rasterized bumpiness on the same layout as `geometric`.
    pub bumpiness: CostGrid,
}

impl TrialContext {
    pub fn new(scenario: &ScenarioConfig) -> Result<Self, HarnessError> {
        scenario.validate()?;
        let terrain = scenario.terrain()?;
        let invalid = |e: crate::costmap::CostmapError| HarnessError::ConfigInvalid(e.to_string());
        let raw = build_geometric_costmap(
            &*terrain.elevation,
            scenario.region,
            &scenario.trail.geometry,
        )
        .map_err(invalid)?;
        let geometric = raw.inflate(scenario.trail.inflation_radius);
        let bumpiness = rasterize_bumpiness(
            &*terrain.bumpiness,
            scenario.region,
            scenario.mppi.bump_resolution,
        )
        .map_err(invalid)?;
        Ok(Self {
            scenario: scenario.clone(),
            terrain,
            geometric,
            bumpiness,
        })
    }

    /// Cost map an MPPI variant plans over.
    pub fn mppi_grid(&self, variant: MppiVariant) -> Result<CostGrid, HarnessError> {
        Ok(match variant {
            MppiVariant::Geo | MppiVariant::GeoTerm => self.geometric.clone(),
            MppiVariant::Bump | MppiVariant::AStarBump => self.bumpiness.clone(),
            MppiVariant::Fused => self.fused()?,
        })
    }

    /// Geometric and bumpiness maps averaged with the configured weight.
    pub fn fused(&self) -> Result<CostGrid, HarnessError> {
        let bump = if self.bumpiness.same_layout(&self.geometric) {
            self.bumpiness.clone()
        } else {
            rasterize_bumpiness(
                &*self.terrain.bumpiness,
                self.scenario.region,
                self.geometric.resolution(),
            )
            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?
        };
        blend_costmaps(&self.geometric, &bump, self.scenario.mppi.fused_weight)
            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))
    }

    /// Speed parameters with the vehicle's top speed and lateral limit.
    pub fn speed_params(&self) -> SpeedParams {
        SpeedParams {
            v_max: self.scenario.limits.v_max,
            a_lat_max: self.scenario.limits.a_lat_max,
            ..self.scenario.trail.speed
        }
    }

    /// A* from `from` to the goal; the first and last cell centers are
    /// replaced by the exact endpoints.
    pub fn astar_points(&self, from: Point2) -> Result<Vec<Point2>, AStarError> {
        let path = AStar::new(&self.geometric, self.scenario.trail.astar)
            .plan(from, self.scenario.goal)?;
        let mut pts = vec![from];
        if path.points.len() > 2 {
            pts.extend_from_slice(&path.points[1..path.points.len() - 1]);
        }
        pts.push(self.scenario.goal);
        Ok(pts)
    }

    /// Full gradient-based plan from `state` moving at `v_now`.
    pub fn plan_trail(&self, state: UnicycleState, v_now: f64) -> Result<Plan, HarnessError> {
        let sc = &self.scenario;
        let t = &sc.trail;
        let astar_points = self
            .astar_points(state.position())
            .map_err(|_| HarnessError::NoPath)?;
        let length: f64 = astar_points.windows(2).map(|w| w[0].distance(w[1])).sum();
        let m = ((length / t.control_spacing).ceil() as usize + 1).clamp(3, t.max_control_points);
        let initial = downsample_path(&astar_points, m).map_err(|_| HarnessError::NoPath)?;

        let speed = self.speed_params();
        let problem = Problem::new(
            &*self.terrain.bumpiness,
            t.weights,
            speed,
            t.footprint,
            t.optimizer.n_dense,
        );
        let cfg = crate::trajopt::OptimizerConfig {
            bounds: sc.region,
            ..t.optimizer
        };
        let result = optimize(&initial, &problem, &cfg)
            .map_err(|e| HarnessError::Planning(e.to_string()))?;

        let path = interpolate(&result.polygon, problem.dense_count(&result.polygon))
            .map_err(|e| HarnessError::Planning(e.to_string()))?;
        let bumps = path_bumpiness(&*self.terrain.bumpiness, &path, &t.footprint);
        let v_start = v_now.min(max_feasible_start_speed(
            &path, &bumps, &sc.limits, &speed, 0.0,
        ));
        let trajectory = time_scale(&path, &bumps, &sc.limits, &speed, (v_start.max(0.0), 0.0))
            .map_err(|e| HarnessError::Planning(e.to_string()))?;
        Ok(Plan {
            astar_points,
            control_points: result.polygon.into_points(),
            trajectory,
            trace: result.trace,
        })
    }
}

struct Episode<'a> {
    plant: Plant<'a>,
    goal: Point2,
    goal_radius: f64,
    time_cap: f64,
    start: Point2,
}

impl<'a> Episode<'a> {
    fn new(ctx: &'a TrialContext, start: UnicycleState) -> Self {
        let sc = &ctx.scenario;
        Self {
            plant: Plant::new(&*ctx.terrain.bumpiness, sc.limits, sc.sim.dt, start),
            goal: sc.goal,
            goal_radius: sc.sim.goal_radius,
            time_cap: sc.sim.time_cap,
            start: start.position(),
        }
    }

    fn at_goal(&self) -> bool {
        self.plant.state.position().distance(self.goal) <= self.goal_radius
    }

    fn out_of_time(&self) -> bool {
        // Integer step count avoids drift from accumulating dt.
        self.plant.log.len() as f64 * self.plant.dt >= self.time_cap - 1e-9
    }

    fn finish(
        self,
        failure: Option<FailureReason>,
        first_plan: Option<Plan>,
        replans: usize,
    ) -> TrialOutcome {
        let success = failure.is_none() && self.at_goal();
        let failure = if success {
            None
        } else {
            failure.or(Some(FailureReason::TimeCap))
        };
        let metrics = compute_metrics(
            &self.plant.log,
            self.plant.state,
            self.start,
            self.goal,
            success,
        );
        TrialOutcome {
            metrics,
            log: self.plant.log,
            failure,
            first_plan,
            replans,
        }
    }
}

/// Run one closed-loop trial of `method` with `seed`.
pub fn run_trial(
    ctx: &TrialContext,
    method: Method,
    seed: u64,
) -> Result<TrialOutcome, HarnessError> {
    let start = ctx.scenario.trial_start(seed);
    match method {
        Method::Trail => run_trail(ctx, start),
        Method::Mppi(v) => run_mppi(ctx, v, start, seed),
    }
}

/// Convenience wrapper building the context on the fly.
pub fn run_scenario_trial(
    scenario: &ScenarioConfig,
    method: Method,
    seed: u64,
) -> Result<TrialOutcome, HarnessError> {
    run_trial(&TrialContext::new(scenario)?, method, seed)
}

fn run_trail(ctx: &TrialContext, start: UnicycleState) -> Result<TrialOutcome, HarnessError> {
    let sc = &ctx.scenario;
    let mut ep = Episode::new(ctx, start);
    if ep.at_goal() {
        return Ok(ep.finish(None, None, 0));
    }
    let mut plan = match ctx.plan_trail(start, 0.0) {
        Ok(p) => p,
        Err(HarnessError::NoPath) => {
            return Ok(ep.finish(Some(FailureReason::NoPathAtStart), None, 0))
        }
        Err(e) => return Err(e),
    };
    let first_plan = plan.clone();
    let mut tracker = MpcTracker::new(sc.trail.mpc, sc.limits);
    let replan_steps = ((sc.trail.replan_period / sc.sim.dt).round() as usize).max(1);
    let mut plan_step = 0usize;
    let mut replans = 0usize;
    let mut v_now = 0.0;

    while !ep.at_goal() && !ep.out_of_time() {
        let step = ep.plant.log.len();
        if step - plan_step >= replan_steps {
            // A failed replan keeps the previous trajectory.
            if let Ok(p) = ctx.plan_trail(ep.plant.state, v_now) {
                plan = p;
                plan_step = step;
                replans += 1;
                tracker.reset();
            }
        }
        let t_local = (step - plan_step) as f64 * sc.sim.dt;
        let u = tracker.control(t_local, ep.plant.state, &plan.trajectory);
        v_now = ep.plant.step(u).v;
    }
    Ok(ep.finish(None, Some(first_plan), replans))
}

fn run_mppi(
    ctx: &TrialContext,
    variant: MppiVariant,
    start: UnicycleState,
    seed: u64,
) -> Result<TrialOutcome, HarnessError> {
    let sc = &ctx.scenario;
    let mut ep = Episode::new(ctx, start);
    if ep.at_goal() {
        return Ok(ep.finish(None, None, 0));
    }
    let grid = ctx.mppi_grid(variant)?;
    let cfg = sc.mppi.config;
    let mut ctl = MppiController::new(cfg, variant, sc.limits, seed)
        .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
    let guide = if variant == MppiVariant::AStarBump {
        match ctx.astar_points(start.position()) {
            Ok(pts) => {
                ctl.init_from_path(start, &pts, sc.mppi.init_speed);
                Some(PathGuide::new(pts, &grid))
            }
            Err(_) => return Ok(ep.finish(Some(FailureReason::NoPathAtStart), None, 0)),
        }
    } else {
        None
    };
    let hold = ((cfg.dt / sc.sim.dt).round() as usize).max(1);
    let mut u = Default::default();
    while !ep.at_goal() && !ep.out_of_time() {
        if ep.plant.log.len() % hold == 0 {
            u = ctl
                .step(ep.plant.state, &grid, sc.goal, guide.as_ref())
                .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        }
        ep.plant.step(u);
    }
    Ok(ep.finish(None, None, 0))
}
