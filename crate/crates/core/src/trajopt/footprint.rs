//! Bumpiness averaged over the vehicle's yaw-aligned square footprint.

use serde::{Deserialize, Serialize};

use crate::field::TerrainField;
use crate::geom::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FootprintSpec {
    /// Side length of the square, meters.
    pub side: f64,
    /// Lattice points per side.
    pub samples_per_side: usize,
}

impl Default for FootprintSpec {
    fn default() -> Self {
        Self {
            side: 0.6,
            samples_per_side: 3,
        }
    }
}

impl FootprintSpec {
    /// Lattice offsets in the vehicle frame, spanning the square edge to edge.
    pub fn offsets(&self) -> Vec<Point2> {
        let k = self.samples_per_side.max(1);
        let coord = |a: usize| {
            if k == 1 {
                0.0
            } else {
                -0.5 * self.side + self.side * a as f64 / (k - 1) as f64
            }
        };
        (0..k)
            .flat_map(|i| (0..k).map(move |j| Point2::new(coord(i), coord(j))))
            .collect()
    }
}

/// Footprint mean with derivatives w.r.t. the center and the yaw.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FootprintSample {
    pub value: f64,
    pub grad_center: Point2,
    pub d_yaw: f64,
}

/// Mean bumpiness over the footprint lattice, with exact derivatives.
pub fn footprint_sample(
    bump: &dyn TerrainField,
    center: Point2,
    yaw: f64,
    offsets: &[Point2],
) -> FootprintSample {
    let (s, c) = yaw.sin_cos();
    let mut out = FootprintSample::default();
    for o in offsets {
        let rotated = Point2::new(c * o.x - s * o.y, s * o.x + c * o.y);
        let q = bump.sample_clamped(center + rotated);
        out.value += q.value;
        out.grad_center += q.gradient;
        // d(R(ψ) o)/dψ is the rotated offset turned by +90°.
        out.d_yaw += q.gradient.dot(rotated.perp());
    }
    let inv = 1.0 / offsets.len() as f64;
    out.value *= inv;
    out.grad_center = out.grad_center * inv;
    out.d_yaw *= inv;
    out
}

/// Mean bumpiness over the `h × h` square centred at `center`, rotated by `yaw`.
pub fn footprint_bumpiness(
    bump: &dyn TerrainField,
    center: Point2,
    yaw: f64,
    fp: &FootprintSpec,
) -> f64 {
    footprint_sample(bump, center, yaw, &fp.offsets()).value
}
