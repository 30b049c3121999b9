//! Raster-backed field with bilinear or bicubic (Catmull-Rom kernel) interpolation.

use super::{BoundsPolicy, FieldError, FieldSample, TerrainField};
use crate::geom::{Bounds, Point2};
use crate::raster::{Raster, RasterError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Bilinear,
    /// Cubic convolution with the Catmull-Rom kernel; C¹ across cell borders.
    #[default]
    Bicubic,
}

/// Samples on a regular lattice; node `(r, c)` sits at `origin + (c, r) * resolution`.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedField {
    origin: Point2,
    resolution: f64,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    interpolation: Interpolation,
    policy: BoundsPolicy,
}

impl GriddedField {
    pub fn new(
        origin: Point2,
        resolution: f64,
        rows: usize,
        cols: usize,
        values: Vec<f64>,
        interpolation: Interpolation,
    ) -> Result<Self, FieldError> {
        let raster = Raster {
            origin_x: origin.x,
            origin_y: origin.y,
            resolution,
            rows,
            cols,
            values,
        };
        Self::from_raster(raster, interpolation)
            .map_err(|e| FieldError::InvalidParameter(e.to_string()))
    }

    pub fn from_raster(raster: Raster, interpolation: Interpolation) -> Result<Self, RasterError> {
        raster.validate(2)?;
        Ok(Self {
            origin: Point2::new(raster.origin_x, raster.origin_y),
            resolution: raster.resolution,
            rows: raster.rows,
            cols: raster.cols,
            values: raster.values,
            interpolation,
            policy: BoundsPolicy::Clamp,
        })
    }

    pub fn to_raster(&self) -> Raster {
        Raster {
            origin_x: self.origin.x,
            origin_y: self.origin.y,
            resolution: self.resolution,
            rows: self.rows,
            cols: self.cols,
            values: self.values.clone(),
        }
    }

    pub fn with_policy(mut self, policy: BoundsPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn node(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn node_position(&self, row: usize, col: usize) -> Point2 {
        self.origin + Point2::new(col as f64, row as f64) * self.resolution
    }

    #[inline]
    fn at(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.rows as isize - 1) as usize;
        let c = col.clamp(0, self.cols as isize - 1) as usize;
        self.values[r * self.cols + c]
    }

    /// Cell index and fractional offset along one axis.
    #[inline]
    fn locate(coord: f64, n: usize) -> (isize, f64) {
        let max_cell = n as isize - 2;
        let i = (coord.floor() as isize).clamp(0, max_cell);
        (i, coord - i as f64)
    }

    fn eval_bilinear(&self, fx: f64, fy: f64) -> FieldSample {
        let (c, tx) = Self::locate(fx, self.cols);
        let (r, ty) = Self::locate(fy, self.rows);
        let v00 = self.at(r, c);
        let v01 = self.at(r, c + 1);
        let v10 = self.at(r + 1, c);
        let v11 = self.at(r + 1, c + 1);
        let value = (1.0 - tx) * (1.0 - ty) * v00
            + tx * (1.0 - ty) * v01
            + (1.0 - tx) * ty * v10
            + tx * ty * v11;
        let dtx = (1.0 - ty) * (v01 - v00) + ty * (v11 - v10);
        let dty = (1.0 - tx) * (v10 - v00) + tx * (v11 - v01);
        FieldSample::new(value, Point2::new(dtx, dty) * (1.0 / self.resolution))
    }

    fn eval_bicubic(&self, fx: f64, fy: f64) -> FieldSample {
        let (c, tx) = Self::locate(fx, self.cols);
        let (r, ty) = Self::locate(fy, self.rows);
        let (wx, dwx) = catmull_rom_weights(tx);
        let (wy, dwy) = catmull_rom_weights(ty);
        let mut value = 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (j, (wyj, dwyj)) in wy.iter().zip(dwy.iter()).enumerate() {
            let mut row_v = 0.0;
            let mut row_d = 0.0;
            for (i, (wxi, dwxi)) in wx.iter().zip(dwx.iter()).enumerate() {
                let v = self.at(r + j as isize - 1, c + i as isize - 1);
                row_v += wxi * v;
                row_d += dwxi * v;
            }
            value += wyj * row_v;
            gx += wyj * row_d;
            gy += dwyj * row_v;
        }
        FieldSample::new(value, Point2::new(gx, gy) * (1.0 / self.resolution))
    }
}

/// Catmull-Rom cubic convolution weights for nodes `-1, 0, 1, 2` and their
/// derivatives with respect to `t`.
#[inline]
fn catmull_rom_weights(t: f64) -> ([f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let w = [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ];
    let d = [
        0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
        0.5 * (9.0 * t2 - 10.0 * t),
        0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
        0.5 * (3.0 * t2 - 2.0 * t),
    ];
    (w, d)
}

impl TerrainField for GriddedField {
    fn bounds(&self) -> Bounds {
        let far = self.node_position(self.rows - 1, self.cols - 1);
        Bounds::new(self.origin.x, far.x, self.origin.y, far.y)
    }

    fn eval(&self, p: Point2) -> FieldSample {
        let fx = (p.x - self.origin.x) / self.resolution;
        let fy = (p.y - self.origin.y) / self.resolution;
        match self.interpolation {
            Interpolation::Bilinear => self.eval_bilinear(fx, fy),
            Interpolation::Bicubic => self.eval_bicubic(fx, fy),
        }
    }

    fn policy(&self) -> BoundsPolicy {
        self.policy
    }
}
