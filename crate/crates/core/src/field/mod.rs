//! Differentiable implicit terrain fields.
//!
//! Every field returns a value together with its exact spatial gradient at any
//! continuous query point. Elevation fields carry meters; bumpiness fields are
//! squashed into `(0, 1)` by [`squash_to_unit`].

mod analytic;
mod gridded;

use std::sync::Arc;

use thiserror::Error;

use crate::geom::{Bounds, Point2};

pub use analytic::{
    gaussian_bump_field, BoxStepField, ConstantField, DiskField, GaussianBump, GaussianBumpField,
    PlaneField, RippleField, SumField,
};
pub use gridded::{GriddedField, Interpolation};

/// Minimum vehicle speed for which a bumpiness label is defined (m/s).
pub const SPEED_FLOOR: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("query point ({x}, {y}) is outside the field bounds")]
    OutOfBounds { x: f64, y: f64 },
    #[error("speed {speed} m/s is at or below the labelling floor")]
    DegenerateSpeed { speed: f64 },
    #[error("invalid field parameter: {0}")]
    InvalidParameter(String),
}

/// Value and spatial gradient of a field at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldSample {
    pub value: f64,
    pub gradient: Point2,
}

impl FieldSample {
    pub const fn new(value: f64, gradient: Point2) -> Self {
        Self { value, gradient }
    }
}

/// What a field does with queries outside its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundsPolicy {
    /// Project the query onto the bounds. The reported gradient is the exact
    /// derivative of `f(clamp(p))`, so clamped components are zero.
    #[default]
    Clamp,
    /// Reject out-of-bounds queries with [`FieldError::OutOfBounds`].
    Strict,
}

/// A scalar field over the plane with an exact gradient.
///
/// Implementations must be deterministic and free of interior mutability so a
/// single field can be shared across threads.
pub trait TerrainField: Send + Sync {
    /// Planning region on which the field is defined.
    fn bounds(&self) -> Bounds;

    /// Evaluate at a point that is already inside [`TerrainField::bounds`].
    fn eval(&self, p: Point2) -> FieldSample;

    fn policy(&self) -> BoundsPolicy {
        BoundsPolicy::Clamp
    }

    /// Evaluate honouring the field's out-of-bounds policy.
    fn query(&self, p: Point2) -> Result<FieldSample, FieldError> {
        let b = self.bounds();
        if b.contains(p) {
            return Ok(self.eval(p));
        }
        match self.policy() {
            BoundsPolicy::Strict => Err(FieldError::OutOfBounds { x: p.x, y: p.y }),
            BoundsPolicy::Clamp => Ok(self.sample_clamped(p)),
        }
    }

    /// Evaluate at the projection of `p` onto the bounds, whatever the policy.
    fn sample_clamped(&self, p: Point2) -> FieldSample {
        let b = self.bounds();
        let q = b.clamp(p);
        let mut s = self.eval(q);
        if q.x != p.x {
            s.gradient.x = 0.0;
        }
        if q.y != p.y {
            s.gradient.y = 0.0;
        }
        s
    }
}

/// Shared, immutable field handle.
pub type SharedField = Arc<dyn TerrainField>;

impl<T: TerrainField + ?Sized> TerrainField for Arc<T> {
    fn bounds(&self) -> Bounds {
        (**self).bounds()
    }
    fn eval(&self, p: Point2) -> FieldSample {
        (**self).eval(p)
    }
    fn policy(&self) -> BoundsPolicy {
        (**self).policy()
    }
}

impl<T: TerrainField + ?Sized> TerrainField for Box<T> {
    fn bounds(&self) -> Bounds {
        (**self).bounds()
    }
    fn eval(&self, p: Point2) -> FieldSample {
        (**self).eval(p)
    }
    fn policy(&self) -> BoundsPolicy {
        (**self).policy()
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Logistic squash of an inner field into `(0, 1)`.
///
/// `value' = sigmoid(scale * value + offset)`. The plain logistic
/// (`scale = 1`, `offset = 0`) is the default.
#[derive(Debug, Clone)]
pub struct SquashedField<F> {
    inner: F,
    scale: f64,
    offset: f64,
}

impl<F: TerrainField> SquashedField<F> {
    pub fn with_affine(inner: F, scale: f64, offset: f64) -> Self {
        Self {
            inner,
            scale,
            offset,
        }
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: TerrainField> TerrainField for SquashedField<F> {
    fn bounds(&self) -> Bounds {
        self.inner.bounds()
    }

    fn eval(&self, p: Point2) -> FieldSample {
        let s = self.inner.eval(p);
        let v = sigmoid(self.scale * s.value + self.offset);
        // Saturated inputs can round to exactly 0 or 1; keep the open interval.
        let v = v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        let d = v * (1.0 - v) * self.scale;
        FieldSample::new(v, s.gradient * d)
    }

    fn policy(&self) -> BoundsPolicy {
        self.inner.policy()
    }
}

/// Squash a field into `(0, 1)` with the plain logistic.
pub fn squash_to_unit<F: TerrainField>(field: F) -> SquashedField<F> {
    SquashedField::with_affine(field, 1.0, 0.0)
}

/// Bumpiness label from a measured vertical-acceleration RMS.
///
/// The RMS is normalized by vehicle speed and squashed by the logistic.
pub fn bumpiness_label(accel_rms: f64, speed: f64) -> Result<f64, FieldError> {
    if !(speed > SPEED_FLOOR) {
        return Err(FieldError::DegenerateSpeed { speed });
    }
    Ok(sigmoid(accel_rms / speed))
}
