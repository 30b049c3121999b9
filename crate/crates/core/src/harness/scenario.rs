//! Scenario files: terrain, task, vehicle and planner settings.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::astar::AStarConfig;
use crate::costmap::GeomCostParams;
use crate::field::{
    gaussian_bump_field, BoxStepField, ConstantField, DiskField, GaussianBump, GriddedField,
    Interpolation, PlaneField, RippleField, SharedField, SquashedField, SumField,
};
use crate::geom::{Bounds, Point2};
use crate::mppi::MppiConfig;
use crate::raster::Raster;
use crate::timescale::VehicleLimits;
use crate::track::{MpcWeights, UnicycleState};
use crate::trajopt::{FootprintSpec, ObjectiveWeights, OptimizerConfig, SpeedParams};

pub const SCENARIO_SCHEMA: &str = "trail-scenario/1";

/// One additive term of a terrain field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldPrimitive {
    Constant {
        value: f64,
    },
    Plane {
        offset: f64,
        slope: Point2,
    },
    GaussianBump {
        center: Point2,
        amplitude: f64,
        sigma: f64,
    },
    BoxStep {
        rect: Bounds,
        height: f64,
        edge: f64,
    },
    Disk {
        center: Point2,
        radius: f64,
        height: f64,
        edge: f64,
    },
    Ripple {
        rect: Bounds,
        amplitude: f64,
        wavelength: f64,
        edge: f64,
    },
    /// Gridded values from a raster JSON file, relative to the scenario file.
    Raster {
        path: PathBuf,
        #[serde(default)]
        bilinear: bool,
    },
}

impl FieldPrimitive {
    fn build(&self, base_dir: &Path) -> Result<SharedField, HarnessError> {
        let invalid = |e: crate::field::FieldError| HarnessError::ConfigInvalid(e.to_string());
        Ok(match self {
            FieldPrimitive::Constant { value } => Arc::new(ConstantField::new(*value)),
            FieldPrimitive::Plane { offset, slope } => Arc::new(PlaneField::new(*offset, *slope)),
            FieldPrimitive::GaussianBump {
                center,
                amplitude,
                sigma,
            } => Arc::new(
                gaussian_bump_field(vec![GaussianBump {
                    center: *center,
                    amplitude: *amplitude,
                    sigma: *sigma,
                }])
                .map_err(invalid)?,
            ),
            FieldPrimitive::BoxStep { rect, height, edge } => {
                Arc::new(BoxStepField::new(*rect, *height, *edge).map_err(invalid)?)
            }
            FieldPrimitive::Disk {
                center,
                radius,
                height,
                edge,
            } => Arc::new(DiskField::new(*center, *radius, *height, *edge).map_err(invalid)?),
            FieldPrimitive::Ripple {
                rect,
                amplitude,
                wavelength,
                edge,
            } => {
                Arc::new(RippleField::new(*rect, *amplitude, *wavelength, *edge).map_err(invalid)?)
            }
            FieldPrimitive::Raster { path, bilinear } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                let raster = Raster::load(&full)
                    .map_err(|e| HarnessError::ConfigInvalid(format!("{}: {e}", full.display())))?;
                let interp = if *bilinear {
                    Interpolation::Bilinear
                } else {
                    Interpolation::Bicubic
                };
                Arc::new(
                    GriddedField::from_raster(raster, interp)
                        .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?,
                )
            }
        })
    }
}

/// Bumpiness: the primitives are summed in logit space and squashed to (0, 1)
/// as `sigmoid(scale * sum + offset)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpinessSpec {
    pub primitives: Vec<FieldPrimitive>,
    #[serde(default = "unit_scale")]
    pub scale: f64,
    #[serde(default)]
    pub offset: f64,
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub theta: f64,
}

impl From<Pose> for UnicycleState {
    fn from(p: Pose) -> Self {
        UnicycleState::new(p.x, p.y, p.theta)
    }
}

/// Settings of the gradient-based pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrailSettings {
    pub geometry: GeomCostParams,
    /// Dilation radius applied to the A* cost map, meters.
    pub inflation_radius: f64,
    pub astar: AStarConfig,
    /// Upper bound on control points.
    pub max_control_points: usize,
    /// Target spacing of control points along the A* path, meters.
    pub control_spacing: f64,
    pub weights: ObjectiveWeights,
    pub speed: SpeedParams,
    pub footprint: FootprintSpec,
    pub optimizer: OptimizerConfig,
    pub mpc: MpcWeights,
    /// Seconds between replans.
    pub replan_period: f64,
}

impl Default for TrailSettings {
    fn default() -> Self {
        Self {
            geometry: GeomCostParams::default(),
            inflation_radius: 0.0,
            astar: AStarConfig::default(),
            max_control_points: 30,
            control_spacing: 0.5,
            weights: ObjectiveWeights::default(),
            speed: SpeedParams::default(),
            footprint: FootprintSpec::default(),
            optimizer: OptimizerConfig::default(),
            mpc: MpcWeights::default(),
            replan_period: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MppiSettings {
    pub config: MppiConfig,
    /// Weight of the geometric map in the fused variant.
    pub fused_weight: f64,
    /// Resolution of the rasterized bumpiness map, meters.
    pub bump_resolution: f64,
    /// Speed used to seed the nominal sequence along the A* path.
    pub init_speed: f64,
}

impl Default for MppiSettings {
    fn default() -> Self {
        Self {
            config: MppiConfig::default(),
            fused_weight: 0.5,
            bump_resolution: 0.25,
            init_speed: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    /// Plant and tracking step, seconds.
    pub dt: f64,
    pub time_cap: f64,
    pub goal_radius: f64,
    /// Uniform start-position jitter half-width, meters (seeded per trial).
    pub start_jitter: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt: 0.05,
            time_cap: 60.0,
            goal_radius: 0.5,
            start_jitter: 0.0,
        }
    }
}

fn default_trials() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: String,
    #[serde(default)]
    pub name: String,
    pub region: Bounds,
    pub elevation: Vec<FieldPrimitive>,
    pub bumpiness: BumpinessSpec,
    pub start: Pose,
    pub goal: Point2,
    #[serde(default)]
    pub limits: VehicleLimits,
    #[serde(default)]
    pub trail: TrailSettings,
    #[serde(default)]
    pub mppi: MppiSettings,
    #[serde(default)]
    pub sim: SimSettings,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Directory that relative raster paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Elevation and bumpiness fields built from a scenario.
#[derive(Clone)]
pub struct Terrain {
    pub elevation: SharedField,
    pub bumpiness: SharedField,
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| HarnessError::ConfigInvalid(format!("scenario JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::ConfigInvalid(m));
        if self.schema != SCENARIO_SCHEMA {
            return bad(format!(
                "schema must be {SCENARIO_SCHEMA:?}, got {:?}",
                self.schema
            ));
        }
        if !self.region.is_nonempty()
            || !self.region.width().is_finite()
            || !self.region.height().is_finite()
        {
            return bad("region must be a finite nonempty rectangle".into());
        }
        let start = Point2::new(self.start.x, self.start.y);
        if !self.region.contains(start) {
            return bad(format!("start {start:?} outside region"));
        }
        if !self.region.contains(self.goal) {
            return bad(format!("goal {:?} outside region", self.goal));
        }
        if !(self.sim.time_cap > 0.0) || !(self.sim.dt > 0.0) || !(self.sim.goal_radius > 0.0) {
            return bad("time_cap, dt and goal_radius must be positive".into());
        }
        if !(self.sim.start_jitter >= 0.0) {
            return bad("start_jitter must be nonnegative".into());
        }
        if self.elevation.is_empty() || self.bumpiness.primitives.is_empty() {
            return bad("elevation and bumpiness need at least one primitive".into());
        }
        if !(self.bumpiness.scale.is_finite() && self.bumpiness.offset.is_finite()) {
            return bad("bumpiness scale and offset must be finite".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        let t = &self.trail;
        if t.max_control_points < 3 || !(t.control_spacing > 0.0) || !(t.replan_period > 0.0) {
            return bad(
                "trail needs max_control_points >= 3 and positive spacing and replan period".into(),
            );
        }
        if !(t.inflation_radius >= 0.0) {
            return bad("inflation_radius must be nonnegative".into());
        }
        let w = &t.weights;
        if !(w.lambda_b >= 0.0 && w.lambda_s >= 0.0 && w.lambda_kappa >= 0.0) {
            return bad("objective weights must be nonnegative".into());
        }
        if !(t.footprint.side > 0.0) || t.footprint.samples_per_side == 0 {
            return bad("footprint needs side > 0 and at least one sample per side".into());
        }
        t.speed.validate().map_err(HarnessError::ConfigInvalid)?;
        t.mpc
            .validate()
            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        self.limits
            .validate()
            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        self.mppi
            .config
            .validate()
            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.mppi.fused_weight) || !(self.mppi.bump_resolution > 0.0) {
            return bad("fused_weight must lie in [0, 1] and bump_resolution be positive".into());
        }
        Ok(())
    }

    /// Build both terrain fields.
    pub fn terrain(&self) -> Result<Terrain, HarnessError> {
        let sum = |prims: &[FieldPrimitive]| -> Result<SumField, HarnessError> {
            let parts = prims
                .iter()
                .map(|p| p.build(&self.base_dir))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(SumField::new(parts))
        };
        Ok(Terrain {
            elevation: Arc::new(sum(&self.elevation)?),
            bumpiness: Arc::new(SquashedField::with_affine(
                sum(&self.bumpiness.primitives)?,
                self.bumpiness.scale,
                self.bumpiness.offset,
            )),
        })
    }

    /// Start pose for trial `trial`, with seeded jitter if configured.
    pub fn trial_start(&self, trial_seed: u64) -> UnicycleState {
        let mut s: UnicycleState = self.start.into();
        if self.sim.start_jitter > 0.0 {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(trial_seed);
            let j = self.sim.start_jitter;
            s.x += rng.gen_range(-j..=j);
            s.y += rng.gen_range(-j..=j);
            let p = self.region.clamp(s.position());
            s.x = p.x;
            s.y = p.y;
        }
        s
    }
}

/// Logit of `p`, handy for writing bumpiness primitives.
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}
