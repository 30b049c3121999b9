//! Fixed-resolution cost rasters for A* and the MPPI baselines.
//!
//! The geometric cost is the product of a normalized slope (from the elevation
//! field's analytic gradient) and a normalized step height (largest elevation
//! jump to the 8-neighbourhood), both clamped to `[0, 1]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::TerrainField;
use crate::geom::{Bounds, Point2};
use crate::raster::{Raster, RasterError};

#[derive(Debug, Error)]
pub enum CostmapError {
    #[error("region {region:?} is not contained in the field bounds {field:?}")]
    RegionOutOfBounds { region: Bounds, field: Bounds },
    #[error("region {0:?} contains no cells")]
    EmptyRegion(Bounds),
    #[error("cost grids differ in origin, resolution or shape")]
    ShapeMismatch,
    #[error("invalid costmap parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Row/column address of a grid cell. Rows grow along +y, columns along +x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridIndex {
    pub row: usize,
    pub col: usize,
}

impl GridIndex {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// Nonnegative cost raster with every cell in `[0, 1]`.
///
/// `origin` is the center of cell `(0, 0)`; cell `(r, c)` is centered at
/// `origin + (c, r) * resolution`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostGrid {
    origin: Point2,
    resolution: f64,
    rows: usize,
    cols: usize,
    cost: Vec<f64>,
}

impl CostGrid {
    pub fn new(
        origin: Point2,
        resolution: f64,
        rows: usize,
        cols: usize,
        cost: Vec<f64>,
    ) -> Result<Self, CostmapError> {
        if !(resolution > 0.0) {
            return Err(CostmapError::InvalidParameter(format!(
                "resolution {resolution}"
            )));
        }
        if rows == 0 || cols == 0 || cost.len() != rows * cols {
            return Err(CostmapError::InvalidParameter(format!(
                "{} values for a {rows}x{cols} grid",
                cost.len()
            )));
        }
        if let Some(v) = cost.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(CostmapError::InvalidParameter(format!(
                "cell cost {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            origin,
            resolution,
            rows,
            cols,
            cost,
        })
    }

    /// Uniform grid covering `region`.
    pub fn filled(region: Bounds, resolution: f64, value: f64) -> Result<Self, CostmapError> {
        let (origin, rows, cols) = grid_layout(region, resolution)?;
        Self::new(origin, resolution, rows, cols, vec![value; rows * cols])
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.cost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cost.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.cost
    }

    #[inline]
    pub fn get(&self, idx: GridIndex) -> f64 {
        self.cost[idx.row * self.cols + idx.col]
    }

    #[inline]
    pub fn set(&mut self, idx: GridIndex, value: f64) {
        self.cost[idx.row * self.cols + idx.col] = value.clamp(0.0, 1.0);
    }

    #[inline]
    pub fn cell_center(&self, idx: GridIndex) -> Point2 {
        self.origin + Point2::new(idx.col as f64, idx.row as f64) * self.resolution
    }

    /// Cell containing `p`, or `None` outside the grid.
    #[inline]
    pub fn cell_of(&self, p: Point2) -> Option<GridIndex> {
        let fc = ((p.x - self.origin.x) / self.resolution + 0.5).floor();
        let fr = ((p.y - self.origin.y) / self.resolution + 0.5).floor();
        if fc < 0.0
            || fr < 0.0
            || fc >= self.cols as f64
            || fr >= self.rows as f64
            || fc.is_nan()
            || fr.is_nan()
        {
            return None;
        }
        Some(GridIndex::new(fr as usize, fc as usize))
    }

    /// Nearest-cell lookup; `None` outside the grid.
    #[inline]
    pub fn lookup(&self, p: Point2) -> Option<f64> {
        self.cell_of(p).map(|i| self.get(i))
    }

    /// Area covered by the cells (cell edges, not centers).
    pub fn extent(&self) -> Bounds {
        let h = 0.5 * self.resolution;
        Bounds::new(
            self.origin.x - h,
            self.origin.x + (self.cols as f64 - 0.5) * self.resolution,
            self.origin.y - h,
            self.origin.y + (self.rows as f64 - 0.5) * self.resolution,
        )
    }

    pub fn min_cost(&self) -> f64 {
        self.cost.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_cost(&self) -> f64 {
        self.cost.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn same_layout(&self, other: &CostGrid) -> bool {
        self.origin == other.origin
            && self.resolution == other.resolution
            && self.rows == other.rows
            && self.cols == other.cols
    }

    /// Iterate over in-grid 8-neighbours of a cell.
    pub fn neighbors8(&self, idx: GridIndex) -> impl Iterator<Item = GridIndex> + '_ {
        const OFFSETS: [(isize, isize); 8] = [
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ];
        OFFSETS.iter().filter_map(move |&(dr, dc)| {
            let r = idx.row as isize + dr;
            let c = idx.col as isize + dc;
            (r >= 0 && c >= 0 && (r as usize) < self.rows && (c as usize) < self.cols)
                .then(|| GridIndex::new(r as usize, c as usize))
        })
    }

    pub fn to_raster(&self) -> Raster {
        Raster {
            origin_x: self.origin.x,
            origin_y: self.origin.y,
            resolution: self.resolution,
            rows: self.rows,
            cols: self.cols,
            values: self.cost.clone(),
        }
    }

    pub fn from_raster(raster: Raster) -> Result<Self, CostmapError> {
        raster.validate(1)?;
        Self::new(
            Point2::new(raster.origin_x, raster.origin_y),
            raster.resolution,
            raster.rows,
            raster.cols,
            raster.values,
        )
    }

    /// Grayscale dilation with a disk: each cell takes the maximum cost of all
    /// cells whose centers lie within `radius` meters.
    pub fn inflate(&self, radius: f64) -> CostGrid {
        if !(radius > 0.0) {
            return self.clone();
        }
        let reach = (radius / self.resolution).floor() as isize;
        let r2 = (radius / self.resolution).powi(2) + 1e-9;
        let offsets: Vec<(isize, isize)> = (-reach..=reach)
            .flat_map(|dr| (-reach..=reach).map(move |dc| (dr, dc)))
            .filter(|&(dr, dc)| ((dr * dr + dc * dc) as f64) <= r2)
            .collect();
        let mut out = self.cost.clone();
        for r in 0..self.rows as isize {
            for c in 0..self.cols as isize {
                let mut m = 0.0f64;
                for &(dr, dc) in &offsets {
                    let rr = r + dr;
                    let cc = c + dc;
                    if rr >= 0 && cc >= 0 && (rr as usize) < self.rows && (cc as usize) < self.cols
                    {
                        m = m.max(self.cost[rr as usize * self.cols + cc as usize]);
                    }
                }
                out[r as usize * self.cols + c as usize] = m;
            }
        }
        CostGrid {
            cost: out,
            ..self.clone()
        }
    }
}

/// Cell-center origin and shape of a grid tiling `region` at `resolution`.
fn grid_layout(region: Bounds, resolution: f64) -> Result<(Point2, usize, usize), CostmapError> {
    if !(resolution > 0.0) {
        return Err(CostmapError::InvalidParameter(format!(
            "resolution {resolution}"
        )));
    }
    if !region.is_nonempty() || !region.width().is_finite() || !region.height().is_finite() {
        return Err(CostmapError::EmptyRegion(region));
    }
    let cols = ((region.width() / resolution) - 1e-9).ceil().max(1.0) as usize;
    let rows = ((region.height() / resolution) - 1e-9).ceil().max(1.0) as usize;
    let origin = Point2::new(
        region.x_min + 0.5 * resolution,
        region.y_min + 0.5 * resolution,
    );
    Ok((origin, rows, cols))
}

fn check_region(field: &dyn TerrainField, region: Bounds) -> Result<(), CostmapError> {
    if !region.is_nonempty() {
        return Err(CostmapError::EmptyRegion(region));
    }
    let fb = field.bounds();
    if !fb.contains_bounds(&region) {
        return Err(CostmapError::RegionOutOfBounds { region, field: fb });
    }
    Ok(())
}

/// Normalization constants for the geometric cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeomCostParams {
    /// Largest acceptable slope (rise over run).
    pub max_slope: f64,
    /// Largest acceptable step between adjacent cells, meters.
    pub max_step: f64,
    /// Cell size, meters.
    pub coarse_resolution: f64,
}

impl Default for GeomCostParams {
    fn default() -> Self {
        Self {
            max_slope: 0.3,
            max_step: 0.2,
            coarse_resolution: 0.25,
        }
    }
}

impl GeomCostParams {
    fn validate(&self) -> Result<(), CostmapError> {
        if self.max_slope > 0.0 && self.max_step > 0.0 && self.coarse_resolution > 0.0 {
            Ok(())
        } else {
            Err(CostmapError::InvalidParameter(format!("{self:?}")))
        }
    }
}

/// Slope-times-step cost grid from an elevation field.
pub fn build_geometric_costmap(
    elev: &dyn TerrainField,
    region: Bounds,
    params: &GeomCostParams,
) -> Result<CostGrid, CostmapError> {
    params.validate()?;
    check_region(elev, region)?;
    let (origin, rows, cols) = grid_layout(region, params.coarse_resolution)?;
    let res = params.coarse_resolution;

    let mut height = Vec::with_capacity(rows * cols);
    let mut slope = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let p = origin + Point2::new(c as f64, r as f64) * res;
            let s = elev.sample_clamped(p);
            height.push(s.value);
            slope.push((s.gradient.norm() / params.max_slope).clamp(0.0, 1.0));
        }
    }

    let mut grid = CostGrid::new(origin, res, rows, cols, vec![0.0; rows * cols])?;
    for r in 0..rows {
        for c in 0..cols {
            let idx = GridIndex::new(r, c);
            let h = height[r * cols + c];
            let step = grid
                .neighbors8(idx)
                .map(|n| (height[n.row * cols + n.col] - h).abs())
                .fold(0.0f64, f64::max);
            let step_norm = (step / params.max_step).clamp(0.0, 1.0);
            grid.cost[r * cols + c] = slope[r * cols + c] * step_norm;
        }
    }
    Ok(grid)
}

/// `weight * a + (1 - weight) * b`, elementwise.
pub fn blend_costmaps(a: &CostGrid, b: &CostGrid, weight: f64) -> Result<CostGrid, CostmapError> {
    if !a.same_layout(b) {
        return Err(CostmapError::ShapeMismatch);
    }
    if !(0.0..=1.0).contains(&weight) {
        return Err(CostmapError::InvalidParameter(format!(
            "blend weight {weight}"
        )));
    }
    let cost = a
        .cost
        .iter()
        .zip(&b.cost)
        .map(|(x, y)| (weight * x + (1.0 - weight) * y).clamp(0.0, 1.0))
        .collect();
    Ok(CostGrid { cost, ..a.clone() })
}

/// Sample a bumpiness field at every cell center of a grid tiling `region`.
pub fn rasterize_bumpiness(
    bump: &dyn TerrainField,
    region: Bounds,
    resolution: f64,
) -> Result<CostGrid, CostmapError> {
    check_region(bump, region)?;
    let (origin, rows, cols) = grid_layout(region, resolution)?;
    let mut cost = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let p = origin + Point2::new(c as f64, r as f64) * resolution;
            cost.push(bump.sample_clamped(p).value.clamp(0.0, 1.0));
        }
    }
    CostGrid::new(origin, resolution, rows, cols, cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{
        gaussian_bump_field, ConstantField, GaussianBump, GriddedField, Interpolation, PlaneField,
    };

    fn region() -> Bounds {
        Bounds::new(-3.0, 3.0, -3.0, 3.0)
    }

    #[test]
    fn flat_field_costs_zero() {
        let g = build_geometric_costmap(
            &ConstantField::new(1.0),
            region(),
            &GeomCostParams::default(),
        )
        .unwrap();
        assert_eq!(g.rows(), 24);
        assert_eq!(g.cols(), 24);
        assert!(g.values().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn saturating_plane_costs_one_inside() {
        // Slope 0.3 = max_slope; a 0.25 m cell step on slope 0.3 is 0.075 m
        // orthogonally, diagonally 0.106 m; max_step 0.05 saturates both.
        let params = GeomCostParams {
            max_slope: 0.3,
            max_step: 0.05,
            coarse_resolution: 0.25,
        };
        let g = build_geometric_costmap(
            &PlaneField::new(0.0, Point2::new(0.3, 0.0)),
            region(),
            &params,
        )
        .unwrap();
        for r in 1..g.rows() - 1 {
            for c in 1..g.cols() - 1 {
                assert!((g.get(GridIndex::new(r, c)) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_ring_with_zero_peak() {
        let bump = gaussian_bump_field(vec![GaussianBump {
            center: Point2::ZERO,
            amplitude: 1.0,
            sigma: 1.0,
        }])
        .unwrap();
        let params = GeomCostParams {
            max_slope: 0.3,
            max_step: 0.2,
            coarse_resolution: 0.25,
        };
        // Region chosen so the bump peak falls exactly on a cell center.
        let region = Bounds::new(-3.125, 3.125, -3.125, 3.125);
        let g = build_geometric_costmap(&bump, region, &params).unwrap();
        let peak = g.cell_of(Point2::ZERO).unwrap();
        assert_eq!(g.cell_center(peak), Point2::ZERO);
        assert_eq!(g.get(peak), 0.0);

        // |∇| of a unit Gaussian is r e^{-r²/2}, maximal at r = σ. Without
        // clamping, the unsaturated slope profile peaks at r = σ; check that the
        // ring reaches its maximum there and is symmetric.
        let params_loose = GeomCostParams {
            max_slope: 10.0,
            max_step: 10.0,
            coarse_resolution: 0.25,
        };
        let g = build_geometric_costmap(&bump, region, &params_loose).unwrap();
        let row = peak.row;
        let (best_col, _) = (peak.col..g.cols())
            .map(|c| (c, g.get(GridIndex::new(row, c))))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let r_at_max = g.cell_center(GridIndex::new(row, best_col)).x;
        assert!(
            (r_at_max - 1.0).abs() <= 0.25 + 1e-12,
            "ring max at r = {r_at_max}"
        );
    }

    #[test]
    fn blend_examples() {
        let a = CostGrid::filled(region(), 0.5, 0.0).unwrap();
        let b = CostGrid::filled(region(), 0.5, 1.0).unwrap();
        assert_eq!(blend_costmaps(&a, &b, 1.0).unwrap(), a);
        let m = blend_costmaps(&a, &b, 0.5).unwrap();
        assert!(m.values().iter().all(|&v| v == 0.5));
        let other = CostGrid::filled(Bounds::new(0.0, 1.0, 0.0, 1.0), 0.5, 0.0).unwrap();
        assert!(matches!(
            blend_costmaps(&a, &other, 0.5),
            Err(CostmapError::ShapeMismatch)
        ));
    }

    #[test]
    fn rasterize_examples() {
        let g = rasterize_bumpiness(&ConstantField::new(0.3), region(), 0.5).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.3));

        let empty = Bounds::new(1.0, 1.0, 0.0, 2.0);
        assert!(matches!(
            rasterize_bumpiness(&ConstantField::new(0.3), empty, 0.5),
            Err(CostmapError::EmptyRegion(_))
        ));

        let bounded = ConstantField::new(0.3).with_bounds(Bounds::new(0.0, 1.0, 0.0, 1.0));
        assert!(matches!(
            rasterize_bumpiness(&bounded, region(), 0.5),
            Err(CostmapError::RegionOutOfBounds { .. })
        ));
    }

    #[test]
    fn inflation_dilates_disk() {
        let mut g = CostGrid::filled(Bounds::new(0.0, 5.0, 0.0, 5.0), 0.5, 0.0).unwrap();
        g.set(GridIndex::new(5, 5), 0.9);
        let inf = g.inflate(1.0);
        assert_eq!(inf.get(GridIndex::new(5, 7)), 0.9);
        assert_eq!(inf.get(GridIndex::new(6, 6)), 0.9);
        assert_eq!(inf.get(GridIndex::new(7, 7)), 0.0); // distance √8 · 0.5 > 1
        assert_eq!(inf.get(GridIndex::new(5, 8)), 0.0);
        assert_eq!(g.inflate(0.0), g);
    }

    #[test]
    fn raster_round_trip_with_field() {
        let g = rasterize_bumpiness(
            &PlaneField::new(0.5, Point2::new(0.01, 0.02)),
            region(),
            0.5,
        )
        .unwrap();
        let r = g.to_raster();
        let back =
            CostGrid::from_raster(Raster::from_json_str(&r.to_json_string().unwrap()).unwrap())
                .unwrap();
        assert_eq!(back, g);
        let field = GriddedField::from_raster(r, Interpolation::Bilinear).unwrap();
        let idx = GridIndex::new(3, 4);
        assert!((field.query(g.cell_center(idx)).unwrap().value - g.get(idx)).abs() < 1e-12);
    }
}
