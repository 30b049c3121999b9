//! Coarse A* search over a [`CostGrid`].
//!
//! Edges connect 8-neighbours. Traversing an edge costs the mean of the two cell
//! costs (plus a small floor) times the distance between cell centers; the
//! heuristic is the straight-line distance times the smallest per-meter cost
//! in the map, which keeps it admissible and consistent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmap::CostGrid;
pub use crate::costmap::GridIndex;
use crate::geom::Point2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AStarError {
    #[error("no traversable path from {start:?} to {goal:?}")]
    NoPath { start: GridIndex, goal: GridIndex },
    #[error("point ({x}, {y}) lies outside the grid")]
    OutOfGrid { x: f64, y: f64 },
    #[error("need at least 2 points to downsample to, got {0}")]
    TooFewPoints(usize),
    #[error("cannot downsample an empty path")]
    EmptyPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AStarConfig {
    /// Added to the per-meter cost of every edge and to the heuristic.
    pub cost_floor: f64,
    /// Cells at or above this cost are removed from the graph.
    pub lethal_threshold: f64,
}

impl Default for AStarConfig {
    fn default() -> Self {
        Self {
            cost_floor: 0.05,
            lethal_threshold: 0.95,
        }
    }
}

/// Result of a successful search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<GridIndex>,
    /// Cell centers matching `cells`.
    pub points: Vec<Point2>,
    /// Accumulated edge cost reported by the search.
    pub cost: f64,
}

impl GridPath {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Recompute the edge-cost sum along `cells`.
    pub fn recompute_cost(&self, grid: &CostGrid, cost_floor: f64) -> f64 {
        self.cells
            .windows(2)
            .map(|w| edge_cost(grid, w[0], w[1], cost_floor))
            .sum()
    }

    pub fn downsample(&self, n_points: usize) -> Result<Vec<Point2>, AStarError> {
        downsample_path(&self.points, n_points)
    }
}

/// `((c_u + c_v) / 2 + cost_floor) · ‖x_u - x_v‖`.
#[inline]
pub fn edge_cost(grid: &CostGrid, u: GridIndex, v: GridIndex, cost_floor: f64) -> f64 {
    let mean = 0.5 * (grid.get(u) + grid.get(v));
    (mean + cost_floor) * grid.cell_center(u).distance(grid.cell_center(v))
}

#[derive(Debug, Clone, Copy)]
struct Open {
    f: f64,
    g: f64,
    idx: usize,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    // BinaryHeap is a max-heap: "greater" pops first. Lowest f wins, then the
    // deeper node (higher g), then the lower linear index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Search output plus the order in which nodes were expanded.
#[derive(Debug, Clone)]
pub struct SearchTrace {
    pub path: GridPath,
    pub expanded: Vec<GridIndex>,
}

pub struct AStar<'a> {
    grid: &'a CostGrid,
    config: AStarConfig,
    per_meter_min: f64,
}

impl<'a> AStar<'a> {
    pub fn new(grid: &'a CostGrid, config: AStarConfig) -> Self {
        let per_meter_min = grid.min_cost() + config.cost_floor;
        Self {
            grid,
            config,
            per_meter_min,
        }
    }

    /// Admissible heuristic: `(min cell cost + floor) · ‖x_n - x_goal‖`.
    #[inline]
    pub fn heuristic(&self, n: GridIndex, goal: GridIndex) -> f64 {
        self.per_meter_min
            * self
                .grid
                .cell_center(n)
                .distance(self.grid.cell_center(goal))
    }

    #[inline]
    pub fn is_lethal(&self, idx: GridIndex) -> bool {
        self.grid.get(idx) >= self.config.lethal_threshold
    }

    /// Graph successors of `u`. Diagonal moves need both orthogonal cells free.
    /// `start` is always treated as free so a vehicle inside an inflated
    /// region can still leave it.
    pub fn successors(
        &self,
        u: GridIndex,
        start: GridIndex,
    ) -> impl Iterator<Item = GridIndex> + '_ {
        let free = move |i: GridIndex| i == start || !self.is_lethal(i);
        self.grid.neighbors8(u).filter(move |&v| {
            if !free(v) {
                return false;
            }
            if v.row != u.row && v.col != u.col {
                free(GridIndex::new(u.row, v.col)) && free(GridIndex::new(v.row, u.col))
            } else {
                true
            }
        })
    }

    pub fn plan(&self, start: Point2, goal: Point2) -> Result<GridPath, AStarError> {
        self.plan_traced(start, goal).map(|t| t.path)
    }

    pub fn plan_traced(&self, start: Point2, goal: Point2) -> Result<SearchTrace, AStarError> {
        let grid = self.grid;
        let s = grid.cell_of(start).ok_or(AStarError::OutOfGrid {
            x: start.x,
            y: start.y,
        })?;
        let g = grid.cell_of(goal).ok_or(AStarError::OutOfGrid {
            x: goal.x,
            y: goal.y,
        })?;
        let lin = |i: GridIndex| i.row * grid.cols() + i.col;
        let unlin = |k: usize| GridIndex::new(k / grid.cols(), k % grid.cols());

        if s != g && self.is_lethal(g) {
            return Err(AStarError::NoPath { start: s, goal: g });
        }

        let n = grid.len();
        let mut best = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut expanded = Vec::new();
        let mut open = BinaryHeap::new();

        best[lin(s)] = 0.0;
        open.push(Open {
            f: self.heuristic(s, g),
            g: 0.0,
            idx: lin(s),
        });

        while let Some(Open { g: gu, idx, .. }) = open.pop() {
            if closed[idx] || gu > best[idx] {
                continue;
            }
            closed[idx] = true;
            let u = unlin(idx);
            expanded.push(u);
            if u == g {
                break;
            }
            for v in self.successors(u, s) {
                let k = lin(v);
                let cand = gu + edge_cost(grid, u, v, self.config.cost_floor);
                if cand < best[k] {
                    best[k] = cand;
                    parent[k] = idx;
                    closed[k] = false;
                    open.push(Open {
                        f: cand + self.heuristic(v, g),
                        g: cand,
                        idx: k,
                    });
                }
            }
        }

        let gi = lin(g);
        if !best[gi].is_finite() {
            return Err(AStarError::NoPath { start: s, goal: g });
        }
        let mut cells = vec![g];
        let mut k = gi;
        while k != lin(s) {
            k = parent[k];
            cells.push(unlin(k));
        }
        cells.reverse();
        let points = cells.iter().map(|&c| grid.cell_center(c)).collect();
        Ok(SearchTrace {
            path: GridPath {
                cells,
                points,
                cost: best[gi],
            },
            expanded,
        })
    }
}

/// Plan on `grid` with the given floor and default lethal threshold.
pub fn plan(
    grid: &CostGrid,
    start: Point2,
    goal: Point2,
    cost_floor: f64,
) -> Result<GridPath, AStarError> {
    AStar::new(
        grid,
        AStarConfig {
            cost_floor,
            ..AStarConfig::default()
        },
    )
    .plan(start, goal)
}

/// Resample a polyline to `n_points` at uniform arc-length spacing.
///
/// Endpoints are kept bit-exact; asking for the current length returns the
/// input unchanged.
pub fn downsample_path(points: &[Point2], n_points: usize) -> Result<Vec<Point2>, AStarError> {
    if points.is_empty() {
        return Err(AStarError::EmptyPath);
    }
    if n_points < 2 {
        return Err(AStarError::TooFewPoints(n_points));
    }
    if n_points == points.len() {
        return Ok(points.to_vec());
    }
    let first = points[0];
    let last = *points.last().unwrap();
    if points.len() == 1 {
        return Ok(vec![first; n_points]);
    }

    let mut cum = Vec::with_capacity(points.len());
    cum.push(0.0);
    for w in points.windows(2) {
        cum.push(cum.last().unwrap() + w[0].distance(w[1]));
    }
    let total = *cum.last().unwrap();

    let mut out = Vec::with_capacity(n_points);
    out.push(first);
    let mut seg = 0;
    for j in 1..n_points - 1 {
        let target = total * j as f64 / (n_points - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 {
            ((target - cum[seg]) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(points[seg].lerp(points[seg + 1], t));
    }
    out.push(last);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Bounds;

    fn uniform(c: f64, n: usize) -> CostGrid {
        CostGrid::filled(
            Bounds::new(0.0, n as f64 * 0.5, 0.0, n as f64 * 0.5),
            0.5,
            c,
        )
        .unwrap()
    }

    #[test]
    fn straight_line_uniform_cost() {
        let grid = uniform(0.2, 20);
        let start = grid.cell_center(GridIndex::new(4, 2));
        let goal = grid.cell_center(GridIndex::new(4, 12));
        let path = plan(&grid, start, goal, 0.05).unwrap();
        assert_eq!(path.len(), 11);
        assert!(path.cells.iter().all(|c| c.row == 4));
        let expected = (0.2 + 0.05) * 10.0 * 0.5;
        assert!((path.cost - expected).abs() < 1e-12);
    }

    #[test]
    fn start_equals_goal() {
        let grid = uniform(0.3, 10);
        let p = grid.cell_center(GridIndex::new(3, 3));
        let path = plan(&grid, p, p, 0.05).unwrap();
        assert_eq!(path.cells, vec![GridIndex::new(3, 3)]);
        assert_eq!(path.cost, 0.0);
    }

    #[test]
    fn out_of_grid_and_blocked() {
        let mut grid = uniform(0.0, 10);
        assert!(matches!(
            plan(&grid, Point2::new(-5.0, 0.0), Point2::new(1.0, 1.0), 0.05),
            Err(AStarError::OutOfGrid { .. })
        ));
        for r in 0..10 {
            grid.set(GridIndex::new(r, 5), 1.0);
        }
        let s = grid.cell_center(GridIndex::new(2, 1));
        let g = grid.cell_center(GridIndex::new(2, 8));
        assert!(matches!(
            plan(&grid, s, g, 0.05),
            Err(AStarError::NoPath { .. })
        ));
    }

    #[test]
    fn no_corner_cutting() {
        let mut grid = uniform(0.0, 6);
        grid.set(GridIndex::new(2, 3), 1.0);
        let a = AStar::new(&grid, AStarConfig::default());
        let succ: Vec<_> = a
            .successors(GridIndex::new(2, 2), GridIndex::new(0, 0))
            .collect();
        assert!(!succ.contains(&GridIndex::new(3, 3)));
        assert!(!succ.contains(&GridIndex::new(1, 3)));
        assert!(succ.contains(&GridIndex::new(3, 2)));
    }

    #[test]
    fn reported_cost_matches_recomputed() {
        let mut grid = uniform(0.1, 16);
        for r in 3..13 {
            grid.set(GridIndex::new(r, 8), 0.97);
        }
        let s = grid.cell_center(GridIndex::new(8, 2));
        let g = grid.cell_center(GridIndex::new(8, 14));
        let path = plan(&grid, s, g, 0.05).unwrap();
        assert!((path.recompute_cost(&grid, 0.05) - path.cost).abs() < 1e-9);
        for w in path.cells.windows(2) {
            assert!(w[0].row.abs_diff(w[1].row) <= 1 && w[0].col.abs_diff(w[1].col) <= 1);
        }
    }

    #[test]
    fn zero_cost_gives_octile_geodesic() {
        let grid = uniform(0.0, 20);
        let s = grid.cell_center(GridIndex::new(1, 1));
        let g = grid.cell_center(GridIndex::new(6, 15));
        let path = plan(&grid, s, g, 0.05).unwrap();
        let (dr, dc) = (5.0f64, 14.0f64);
        let octile = (dc - dr) + dr * std::f64::consts::SQRT_2;
        assert!((path.cost - 0.05 * 0.5 * octile).abs() < 1e-12);
    }

    #[test]
    fn downsample_examples() {
        let pts: Vec<Point2> = (0..40)
            .map(|i| Point2::new(i as f64 * 0.25, (i as f64 * 0.1).sin()))
            .collect();
        let d = downsample_path(&pts, 30).unwrap();
        assert_eq!(d.len(), 30);
        assert_eq!(d[0], pts[0]);
        assert_eq!(d[29], pts[39]);
        assert_eq!(downsample_path(&pts, 40).unwrap(), pts);

        let line: Vec<Point2> = (0..10).map(|i| Point2::new(i as f64, 0.0)).collect();
        let d = downsample_path(&line, 3).unwrap();
        assert_eq!(d.len(), 3);
        assert!((d[1].x - 4.5).abs() <= 1.0);

        assert_eq!(downsample_path(&line, 1), Err(AStarError::TooFewPoints(1)));
        assert_eq!(downsample_path(&[], 3), Err(AStarError::EmptyPath));
    }
}
