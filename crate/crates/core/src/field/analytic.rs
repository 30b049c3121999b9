//! Closed-form fields used to author synthetic terrain.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{sigmoid, FieldError, FieldSample, TerrainField};
use crate::geom::{Bounds, Point2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField {
    value: f64,
    bounds: Bounds,
}

impl ConstantField {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            bounds: Bounds::UNBOUNDED,
        }
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = bounds;
        self
    }
}

impl TerrainField for ConstantField {
    fn bounds(&self) -> Bounds {
        self.bounds
    }
    fn eval(&self, _p: Point2) -> FieldSample {
        FieldSample::new(self.value, Point2::ZERO)
    }
}

/// `v(p) = offset + slope · p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneField {
    offset: f64,
    slope: Point2,
}

impl PlaneField {
    pub fn new(offset: f64, slope: Point2) -> Self {
        Self { offset, slope }
    }
}

impl TerrainField for PlaneField {
    fn bounds(&self) -> Bounds {
        Bounds::UNBOUNDED
    }
    fn eval(&self, p: Point2) -> FieldSample {
        FieldSample::new(self.offset + self.slope.dot(p), self.slope)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump {
    pub center: Point2,
    pub amplitude: f64,
    pub sigma: f64,
}

/// Sum of isotropic Gaussians `Σ a_k exp(-‖p - c_k‖² / (2σ_k²))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBumpField {
    bumps: Vec<GaussianBump>,
}

impl GaussianBumpField {
    pub fn bumps(&self) -> &[GaussianBump] {
        &self.bumps
    }
}

/// Build a Gaussian bump field. Every width must be strictly positive.
pub fn gaussian_bump_field(bumps: Vec<GaussianBump>) -> Result<GaussianBumpField, FieldError> {
    if let Some(b) = bumps.iter().find(|b| !(b.sigma > 0.0)) {
        return Err(FieldError::InvalidParameter(format!(
            "gaussian width must be > 0, got {}",
            b.sigma
        )));
    }
    Ok(GaussianBumpField { bumps })
}

impl TerrainField for GaussianBumpField {
    fn bounds(&self) -> Bounds {
        Bounds::UNBOUNDED
    }

    fn eval(&self, p: Point2) -> FieldSample {
        let mut value = 0.0;
        let mut gradient = Point2::ZERO;
        for b in &self.bumps {
            let d = p - b.center;
            let inv_var = 1.0 / (b.sigma * b.sigma);
            let g = b.amplitude * (-0.5 * d.norm_sq() * inv_var).exp();
            value += g;
            gradient -= d * (g * inv_var);
        }
        FieldSample::new(value, gradient)
    }
}

/// Smoothed rectangular plateau: `h · s(x-x0) s(x1-x) s(y-y0) s(y1-y)` with
/// logistic edges `s(u) = sigmoid(u / edge)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStepField {
    rect: Bounds,
    height: f64,
    edge: f64,
}

impl BoxStepField {
    pub fn new(rect: Bounds, height: f64, edge: f64) -> Result<Self, FieldError> {
        if !(edge > 0.0) || !rect.is_nonempty() {
            return Err(FieldError::InvalidParameter(
                "box step needs a nonempty rectangle and edge > 0".into(),
            ));
        }
        Ok(Self { rect, height, edge })
    }
}

/// `(s, ds/du)` for the logistic edge.
#[inline]
fn edge_fn(u: f64, edge: f64) -> (f64, f64) {
    let s = sigmoid(u / edge);
    (s, s * (1.0 - s) / edge)
}

impl TerrainField for BoxStepField {
    fn bounds(&self) -> Bounds {
        Bounds::UNBOUNDED
    }

    fn eval(&self, p: Point2) -> FieldSample {
        let r = &self.rect;
        let (a, da) = edge_fn(p.x - r.x_min, self.edge);
        let (b, db) = edge_fn(r.x_max - p.x, self.edge);
        let (c, dc) = edge_fn(p.y - r.y_min, self.edge);
        let (d, dd) = edge_fn(r.y_max - p.y, self.edge);
        let sx = a * b;
        let sy = c * d;
        let dsx = da * b - a * db;
        let dsy = dc * d - c * dd;
        FieldSample::new(
            self.height * sx * sy,
            Point2::new(self.height * dsx * sy, self.height * sx * dsy),
        )
    }
}

/// Egg-crate texture `A sin(2πx/λ) sin(2πy/λ)` confined to a smoothed
/// rectangle. Stands in for rough vegetation in synthetic elevation maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RippleField {
    mask: BoxStepField,
    amplitude: f64,
    wavelength: f64,
}

impl RippleField {
    pub fn new(
        rect: Bounds,
        amplitude: f64,
        wavelength: f64,
        edge: f64,
    ) -> Result<Self, FieldError> {
        if !(wavelength > 0.0) {
            return Err(FieldError::InvalidParameter(
                "ripple needs wavelength > 0".into(),
            ));
        }
        Ok(Self {
            mask: BoxStepField::new(rect, 1.0, edge)?,
            amplitude,
            wavelength,
        })
    }
}

impl TerrainField for RippleField {
    fn bounds(&self) -> Bounds {
        Bounds::UNBOUNDED
    }

    fn eval(&self, p: Point2) -> FieldSample {
        let k = std::f64::consts::TAU / self.wavelength;
        let (sx, cx) = (k * p.x).sin_cos();
        let (sy, cy) = (k * p.y).sin_cos();
        let w = self.amplitude * sx * sy;
        let dw = Point2::new(self.amplitude * k * cx * sy, self.amplitude * k * sx * cy);
        let m = self.mask.eval(p);
        FieldSample::new(w * m.value, dw * m.value + m.gradient * w)
    }
}

/// Smoothed circular plateau `h · sigmoid((radius - ‖p - c‖) / edge)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskField {
    center: Point2,
    radius: f64,
    height: f64,
    edge: f64,
}

impl DiskField {
    pub fn new(center: Point2, radius: f64, height: f64, edge: f64) -> Result<Self, FieldError> {
        if !(edge > 0.0) || !(radius > 0.0) {
            return Err(FieldError::InvalidParameter(
                "disk needs radius > 0 and edge > 0".into(),
            ));
        }
        Ok(Self {
            center,
            radius,
            height,
            edge,
        })
    }
}

impl TerrainField for DiskField {
    fn bounds(&self) -> Bounds {
        Bounds::UNBOUNDED
    }

    fn eval(&self, p: Point2) -> FieldSample {
        let d = p - self.center;
        let r = d.norm();
        let (s, ds) = edge_fn(self.radius - r, self.edge);
        let gradient = if r > 0.0 {
            d * (-self.height * ds / r)
        } else {
            Point2::ZERO
        };
        FieldSample::new(self.height * s, gradient)
    }
}

/// Pointwise sum of fields; bounds are the intersection of the parts.
#[derive(Clone, Default)]
pub struct SumField {
    parts: Vec<Arc<dyn TerrainField>>,
}

impl SumField {
    pub fn new(parts: Vec<Arc<dyn TerrainField>>) -> Self {
        Self { parts }
    }

    pub fn push(&mut self, part: Arc<dyn TerrainField>) {
        self.parts.push(part);
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

impl TerrainField for SumField {
    fn bounds(&self) -> Bounds {
        self.parts.iter().fold(Bounds::UNBOUNDED, |acc, f| {
            let b = f.bounds();
            Bounds::new(
                acc.x_min.max(b.x_min),
                acc.x_max.min(b.x_max),
                acc.y_min.max(b.y_min),
                acc.y_max.min(b.y_max),
            )
        })
    }

    fn eval(&self, p: Point2) -> FieldSample {
        // Parts with narrower bounds than the intersection never see p outside them.
        self.parts.iter().fold(FieldSample::default(), |acc, f| {
            let s = f.eval(p);
            FieldSample::new(acc.value + s.value, acc.gradient + s.gradient)
        })
    }
}
