//! Plain JSON raster shared by [`GriddedField`](crate::field::GriddedField) and
//! [`CostGrid`](crate::costmap::CostGrid).
//!
//! ```json
//! {
//!   "origin_x": 0.0, "origin_y": 0.0, "resolution": 0.25,
//!   "rows": 2, "cols": 3,
//!   "values": [0.0, 0.1, 0.2, 1.0, 1.1, 1.2]
//! }
//! ```
//!
//! `values` is row-major; row `r`, column `c` is the sample located at
//! `(origin_x + c * resolution, origin_y + r * resolution)`. Rows grow along +y.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("raster has {got} values, expected rows*cols = {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("raster resolution must be > 0, got {0}")]
    BadResolution(f64),
    #[error("raster must have at least {min} rows and columns, got {rows}x{cols}")]
    TooSmall {
        rows: usize,
        cols: usize,
        min: usize,
    },
    #[error("raster contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    pub origin_x: f64,
    pub origin_y: f64,
    pub resolution: f64,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Raster {
    pub fn validate(&self, min_side: usize) -> Result<(), RasterError> {
        if !(self.resolution > 0.0) || !self.resolution.is_finite() {
            return Err(RasterError::BadResolution(self.resolution));
        }
        if self.rows < min_side || self.cols < min_side {
            return Err(RasterError::TooSmall {
                rows: self.rows,
                cols: self.cols,
                min: min_side,
            });
        }
        let expected = self.rows * self.cols;
        if self.values.len() != expected {
            return Err(RasterError::SizeMismatch {
                expected,
                got: self.values.len(),
            });
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(RasterError::NonFinite(i));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self, RasterError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String, RasterError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RasterError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RasterError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
