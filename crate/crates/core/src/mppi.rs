//! Sampling-based MPPI baseline over a fixed-resolution cost grid.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmap::CostGrid;
use crate::geom::Point2;
use crate::timescale::VehicleLimits;
use crate::track::{rollout, ControlInput, UnicycleState};

/// Terminal weight multiplier of [`MppiVariant::GeoTerm`] relative to `Geo`.
pub const GEO_TERM_FACTOR: f64 = 5.0;

#[derive(Debug, Error)]
pub enum MppiError {
    #[error("invalid MPPI configuration: {0}")]
    InvalidConfig(String),
    #[error("nominal sequence has {got} inputs, horizon is {expected}")]
    NominalLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MppiVariant {
    /// Geometric cost map.
    Geo,
    /// Geometric map with a heavier terminal term.
    GeoTerm,
    /// Bumpiness map.
    Bump,
    /// Bumpiness map, seeded with and pulled toward an A* path.
    AStarBump,
    /// Average of the geometric and bumpiness maps.
    Fused,
}

impl MppiVariant {
    pub const ALL: [MppiVariant; 5] = [
        MppiVariant::Geo,
        MppiVariant::GeoTerm,
        MppiVariant::Bump,
        MppiVariant::AStarBump,
        MppiVariant::Fused,
    ];

    pub fn terminal_factor(self) -> f64 {
        if self == MppiVariant::GeoTerm {
            GEO_TERM_FACTOR
        } else {
            1.0
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MppiVariant::Geo => "geo",
            MppiVariant::GeoTerm => "geo-term",
            MppiVariant::Bump => "bump",
            MppiVariant::AStarBump => "astar-bump",
            MppiVariant::Fused => "fused",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MppiWeights {
    pub goal_dist: f64,
    pub terrain_cost: f64,
    pub control_effort: f64,
    pub terminal: f64,
    pub path_deviation: f64,
}

impl Default for MppiWeights {
    fn default() -> Self {
        Self {
            goal_dist: 1.0,
            terrain_cost: 5.0,
            control_effort: 0.05,
            terminal: 5.0,
            path_deviation: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MppiConfig {
    pub horizon: usize,
    pub dt: f64,
    pub samples: usize,
    pub temperature: f64,
    /// Standard deviations of the (v, ω) perturbations.
    pub noise_std: [f64; 2],
    pub weights: MppiWeights,
    /// Cells at or above this cost are lethal.
    pub lethal_threshold: f64,
    /// Per-state penalty for lethal or off-grid states.
    pub lethal_cost: f64,
}

impl Default for MppiConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            dt: 0.1,
            samples: 4096,
            temperature: 1.0,
            noise_std: [0.5, 0.8],
            weights: MppiWeights::default(),
            lethal_threshold: 0.95,
            lethal_cost: 1e4,
        }
    }
}

impl MppiConfig {
    pub fn validate(&self) -> Result<(), MppiError> {
        let bad = |m: &str| Err(MppiError::InvalidConfig(m.into()));
        if self.horizon == 0 || self.samples == 0 {
            return bad("horizon and samples must be at least 1");
        }
        if !(self.dt > 0.0) || !(self.temperature > 0.0) {
            return bad("dt and temperature must be positive");
        }
        if !(self.noise_std[0] > 0.0 && self.noise_std[1] > 0.0) {
            return bad("noise standard deviations must be positive");
        }
        let w = &self.weights;
        if [
            w.goal_dist,
            w.terrain_cost,
            w.control_effort,
            w.terminal,
            w.path_deviation,
        ]
        .iter()
        .any(|x| !(*x >= 0.0))
        {
            return bad("cost weights must be nonnegative");
        }
        Ok(())
    }
}

/// Reference path for [`MppiVariant::AStarBump`], with the distance to it
/// precomputed at every grid cell.
#[derive(Debug, Clone)]
pub struct PathGuide {
    pub points: Vec<Point2>,
    layout: CostGrid,
    sq_dist: Vec<f64>,
}

impl PathGuide {
    pub fn new(points: Vec<Point2>, grid: &CostGrid) -> Self {
        assert!(!points.is_empty(), "empty guide path");
        let cols = grid.cols();
        let sq_dist: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let c = grid.cell_center(crate::costmap::GridIndex::new(i / cols, i % cols));
                nearest_sq(&points, c)
            })
            .collect();
        Self {
            points,
            layout: grid.clone(),
            sq_dist,
        }
    }

    /// Squared distance from `p` to the nearest path point (cell-resolution).
    pub fn sq_distance(&self, p: Point2) -> f64 {
        match self.layout.cell_of(p) {
            Some(idx) => self.sq_dist[idx.row * self.layout.cols() + idx.col],
            None => nearest_sq(&self.points, p),
        }
    }
}

fn nearest_sq(points: &[Point2], p: Point2) -> f64 {
    points
        .iter()
        .map(|q| (*q - p).norm_sq())
        .fold(f64::INFINITY, f64::min)
}

/// Cost of one rollout: `states` has one more entry than `inputs`.
pub fn rollout_cost(
    states: &[UnicycleState],
    inputs: &[ControlInput],
    grid: &CostGrid,
    goal: Point2,
    variant: MppiVariant,
    cfg: &MppiConfig,
    guide: Option<&PathGuide>,
) -> f64 {
    debug_assert_eq!(states.len(), inputs.len() + 1);
    let w = &cfg.weights;
    let mut terrain = 0.0;
    let mut goal_dist = 0.0;
    let mut deviation = 0.0;
    for s in &states[1..] {
        let p = s.position();
        terrain += match grid.lookup(p) {
            Some(c) if c < cfg.lethal_threshold => w.terrain_cost * c,
            _ => cfg.lethal_cost,
        };
        goal_dist += p.distance(goal);
        if let Some(g) = guide {
            deviation += g.sq_distance(p);
        }
    }
    let effort: f64 = inputs.iter().map(|u| u.v * u.v + u.omega * u.omega).sum();
    let terminal = states[states.len() - 1].position().distance(goal);
    let mut c = terrain
        + w.goal_dist * goal_dist
        + w.control_effort * effort
        + w.terminal * variant.terminal_factor() * terminal;
    if variant == MppiVariant::AStarBump && guide.is_some() {
        c += w.path_deviation * deviation / (states.len() - 1) as f64;
    }
    c
}

/// Normalized `exp(-(c - min c) / λ)` weights.
pub fn softmax_weights(costs: &[f64], temperature: f64) -> Vec<f64> {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = costs
        .iter()
        .map(|c| (-(c - min) / temperature).exp())
        .collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / z).collect()
}

/// Result of one MPPI update.
#[derive(Debug, Clone)]
pub struct MppiStep {
    /// Input to apply now.
    pub input: ControlInput,
    /// Weighted-average sequence before shifting.
    pub sequence: Vec<ControlInput>,
    /// Warm start for the next call (shifted, last input repeated).
    pub nominal: Vec<ControlInput>,
    pub costs: Vec<f64>,
    pub weights: Vec<f64>,
    pub samples: Vec<Vec<ControlInput>>,
}

impl MppiStep {
    pub fn best_index(&self) -> usize {
        self.costs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i)
    }
}

/// One MPPI update from `s0` around `nominal`.
#[allow(clippy::too_many_arguments)]
pub fn mppi_step(
    s0: UnicycleState,
    nominal: &[ControlInput],
    grid: &CostGrid,
    goal: Point2,
    variant: MppiVariant,
    cfg: &MppiConfig,
    limits: &VehicleLimits,
    guide: Option<&PathGuide>,
    seed: u64,
) -> Result<MppiStep, MppiError> {
    cfg.validate()?;
    let n = cfg.horizon;
    if nominal.len() != n {
        return Err(MppiError::NominalLength {
            expected: n,
            got: nominal.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = Normal::new(0.0, cfg.noise_std[0]).expect("positive std");
    let nw = Normal::new(0.0, cfg.noise_std[1]).expect("positive std");
    let samples: Vec<Vec<ControlInput>> = (0..cfg.samples)
        .map(|_| {
            nominal
                .iter()
                .map(|u| {
                    ControlInput::new(u.v + nv.sample(&mut rng), u.omega + nw.sample(&mut rng))
                        .clamped(limits)
                })
                .collect()
        })
        .collect();

    let costs: Vec<f64> = samples
        .par_iter()
        .map(|u| rollout_cost(&rollout(s0, u, cfg.dt), u, grid, goal, variant, cfg, guide))
        .collect();
    let weights = softmax_weights(&costs, cfg.temperature);

    let mut sequence = vec![ControlInput::default(); n];
    for (w, u) in weights.iter().zip(&samples) {
        for (acc, x) in sequence.iter_mut().zip(u) {
            acc.v += w * x.v;
            acc.omega += w * x.omega;
        }
    }
    let mut next = sequence[1..].to_vec();
    next.push(sequence[n - 1]);
    Ok(MppiStep {
        input: sequence[0],
        sequence,
        nominal: next,
        costs,
        weights,
        samples,
    })
}

/// Stateful MPPI controller: keeps the warm start and derives a fresh seed
/// for every update.
#[derive(Debug, Clone)]
pub struct MppiController {
    pub cfg: MppiConfig,
    pub variant: MppiVariant,
    pub limits: VehicleLimits,
    pub nominal: Vec<ControlInput>,
    seed: u64,
    updates: u64,
}

impl MppiController {
    pub fn new(
        cfg: MppiConfig,
        variant: MppiVariant,
        limits: VehicleLimits,
        seed: u64,
    ) -> Result<Self, MppiError> {
        cfg.validate()?;
        Ok(Self {
            nominal: vec![ControlInput::default(); cfg.horizon],
            cfg,
            variant,
            limits,
            seed,
            updates: 0,
        })
    }

    /// Seed the nominal sequence by steering along `path` at `speed`.
    pub fn init_from_path(&mut self, s0: UnicycleState, path: &[Point2], speed: f64) {
        let mut s = s0;
        let mut target = 0;
        let lookahead = speed.max(0.1) * self.cfg.dt * 3.0;
        self.nominal = (0..self.cfg.horizon)
            .map(|_| {
                while target + 1 < path.len() && path[target].distance(s.position()) < lookahead {
                    target += 1;
                }
                let d = path.get(target).map_or(Point2::ZERO, |p| *p - s.position());
                let err = crate::geom::wrap_angle(d.y.atan2(d.x) - s.theta);
                let u = ControlInput::new(speed, err / (3.0 * self.cfg.dt)).clamped(&self.limits);
                s = crate::track::step_dynamics(s, u, self.cfg.dt);
                u
            })
            .collect();
    }

    pub fn step(
        &mut self,
        s0: UnicycleState,
        grid: &CostGrid,
        goal: Point2,
        guide: Option<&PathGuide>,
    ) -> Result<ControlInput, MppiError> {
        let seed = self.seed ^ self.updates.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        self.updates += 1;
        let out = mppi_step(
            s0,
            &self.nominal,
            grid,
            goal,
            self.variant,
            &self.cfg,
            &self.limits,
            guide,
            seed,
        )?;
        self.nominal = out.nominal;
        Ok(out.input)
    }
}
