//! Centripetal Catmull-Rom interpolation from control points to a dense,
//! arc-length-sampled path, with the exact Jacobian of every dense point with
//! respect to every control point.
//!
//! Sampling is two-pass: the curve is first sampled at uniform parameter
//! steps, then re-sampled at uniform arc length along that fine polyline by
//! locating each target length and mapping it back to a curve parameter.
//! Every dense point therefore lies on the curve itself.

use thiserror::Error;

use crate::dual::Dual;
use crate::geom::Point2;

/// Knot spacing used for coincident control points.
pub const KNOT_EPS: f64 = 1e-9;

/// Pairs of points closer than this make a curvature triplet degenerate.
pub const TRIPLET_EPS: f64 = 1e-12;

/// Default dense sample count for a 30-point control polygon.
pub const DEFAULT_DENSE_SAMPLES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("control polygon needs at least 2 finite points, got {0}")]
    DegenerateControl(String),
    #[error("dense sample count {n_dense} must exceed the control count {n_ctrl}")]
    TooFewDenseSamples { n_dense: usize, n_ctrl: usize },
}

/// Catmull-Rom control points. The first and last point are the fixed path
/// endpoints; the interior points are the optimization variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPolygon {
    points: Vec<Point2>,
}

impl ControlPolygon {
    pub fn new(points: Vec<Point2>) -> Result<Self, SplineError> {
        if points.len() < 2 {
            return Err(SplineError::DegenerateControl(format!(
                "{} points",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(SplineError::DegenerateControl(format!(
                "point {i} is not finite"
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Point2 {
        self.points[0]
    }

    pub fn last(&self) -> Point2 {
        self.points[self.points.len() - 1]
    }

    pub fn interior(&self) -> &[Point2] {
        &self.points[1..self.points.len() - 1]
    }

    /// Replace the interior points, keeping the endpoints untouched.
    pub fn set_interior(&mut self, interior: &[Point2]) {
        let n = self.points.len();
        assert_eq!(interior.len(), n - 2, "interior size mismatch");
        self.points[1..n - 1].copy_from_slice(interior);
    }

    pub fn into_points(self) -> Vec<Point2> {
        self.points
    }

    /// Point on the curve at local parameter `u ∈ [0, 1]` of segment `seg`
    /// (the piece between control points `seg` and `seg + 1`).
    pub fn eval(&self, seg: usize, u: f64) -> Point2 {
        let [x, y] = segment_point(&self.segment_controls(seg), u);
        Point2::new(x.v, y.v)
    }

    pub fn segments(&self) -> usize {
        self.points.len() - 1
    }

    /// The four points shaping segment `seg`. Past either end a phantom
    /// neighbour continues the polygon with the turning angle of the first
    /// interior vertex, so evenly spaced points on a circle stay on it.
    fn stencil(&self, seg: usize) -> [LocalControl; 4] {
        let last = self.points.len() - 1;
        let own = |i: usize| LocalControl::own(i, self.points[i]);
        let before = if seg == 0 {
            self.phantom([0, 1, 2.min(last)])
        } else {
            own(seg - 1)
        };
        let after = if seg + 2 > last {
            self.phantom([last, last - 1, last.saturating_sub(2)])
        } else {
            own(seg + 2)
        };
        [before, own(seg), own(seg + 1), after]
    }

    /// Phantom beyond `idx[0]`, given the next two points walking inward.
    fn phantom(&self, idx: [usize; 3]) -> LocalControl {
        type D6 = Dual<6>;
        let v = |k: usize, axis: usize| {
            let p = self.points[idx[k]];
            D6::var(if axis == 0 { p.x } else { p.y }, 2 * k + axis)
        };
        let (x0, y0, x1, y1, x2, y2) = (v(0, 0), v(0, 1), v(1, 0), v(1, 1), v(2, 0), v(2, 1));
        let (ax, ay) = (x1 - x0, y1 - y0);
        let (bx, by) = (x2 - x1, y2 - y1);
        let la = (ax * ax + ay * ay).sqrt();
        let lb = (bx * bx + by * by).sqrt();
        let (cos, sin) = if idx[2] != idx[1] && la.v > KNOT_EPS && lb.v > KNOT_EPS {
            let n = la * lb;
            ((ax * bx + ay * by) / n, (ax * by - ay * bx) / n)
        } else {
            (D6::constant(1.0), D6::constant(0.0))
        };
        // c0 - R(-φ)(c1 - c0)
        let px = x0 - (cos * ax + sin * ay);
        let py = y0 - (cos * ay - sin * ax);
        let mut deps = [(idx[0], [[0.0; 2]; 2]); 3];
        for k in 0..3 {
            deps[k].0 = idx[k];
            for j in 0..2 {
                deps[k].1[0][j] = px.d[2 * k + j];
                deps[k].1[1][j] = py.d[2 * k + j];
            }
        }
        LocalControl {
            pos: Point2::new(px.v, py.v),
            deps,
        }
    }

    fn segment_controls(&self, seg: usize) -> [Point2; 4] {
        self.stencil(seg).map(|l| l.pos)
    }
}

/// A point feeding a segment, with its derivative w.r.t. up to three control
/// points (`deps[k].1[out][in]`).
#[derive(Debug, Clone, Copy)]
struct LocalControl {
    pos: Point2,
    deps: [(usize, [[f64; 2]; 2]); 3],
}

impl LocalControl {
    fn own(i: usize, pos: Point2) -> Self {
        let zero = [[0.0; 2]; 2];
        Self {
            pos,
            deps: [(i, [[1.0, 0.0], [0.0, 1.0]]), (i, zero), (i, zero)],
        }
    }
}

type D9 = Dual<9>;

/// Barry-Goldman evaluation of one centripetal segment. Tangent directions
/// 0..8 are the control coordinates `(P0.x, P0.y, …, P3.y)`, direction 8 is `u`.
fn segment_point(p: &[Point2; 4], u: f64) -> [D9; 2] {
    let px: [D9; 4] = std::array::from_fn(|k| D9::var(p[k].x, 2 * k));
    let py: [D9; 4] = std::array::from_fn(|k| D9::var(p[k].y, 2 * k + 1));
    let u = D9::var(u, 8);

    let spacing = |a: usize, b: usize| -> D9 {
        let dx = px[b] - px[a];
        let dy = py[b] - py[a];
        let d2 = dx * dx + dy * dy;
        // ‖Δ‖^½ = (‖Δ‖²)^¼
        let s = d2.sqrt().sqrt();
        if s.v < KNOT_EPS || d2.v == 0.0 {
            D9::constant(KNOT_EPS)
        } else {
            s
        }
    };
    let t0 = D9::constant(0.0);
    let t1 = t0 + spacing(0, 1);
    let t2 = t1 + spacing(1, 2);
    let t3 = t2 + spacing(2, 3);
    let t = t1 + u * (t2 - t1);

    let lerp = |a: (D9, D9), b: (D9, D9), w: D9| (a.0 + (b.0 - a.0) * w, a.1 + (b.1 - a.1) * w);
    let a1 = lerp((px[0], py[0]), (px[1], py[1]), (t - t0) / (t1 - t0));
    let a2 = lerp((px[1], py[1]), (px[2], py[2]), (t - t1) / (t2 - t1));
    let a3 = lerp((px[2], py[2]), (px[3], py[3]), (t - t2) / (t3 - t2));
    let b1 = lerp(a1, a2, (t - t0) / (t2 - t0));
    let b2 = lerp(a2, a3, (t - t1) / (t3 - t1));
    let c = lerp(b1, b2, u);
    [c.0, c.1]
}

/// Dense path sampled (approximately) uniformly in arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePath {
    pub points: Vec<Point2>,
    /// `Δs_i = ‖p_{i+1} - p_i‖`, one per segment.
    pub seg_lengths: Vec<f64>,
    /// Signed curvature per sample.
    pub curvatures: Vec<f64>,
}

impl DensePath {
    /// Build from explicit samples, computing segment lengths and curvature.
    pub fn from_points(points: Vec<Point2>) -> Self {
        let seg_lengths = points.windows(2).map(|w| w[0].distance(w[1])).collect();
        let curvatures = sample_curvatures(&points);
        Self {
            points,
            seg_lengths,
            curvatures,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.seg_lengths.iter().sum()
    }
}

/// Menger curvature of a triplet, with a flag for degenerate input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature {
    pub value: f64,
    pub degenerate: bool,
}

/// Signed Menger curvature `2 (b-a)×(c-b) / (‖b-a‖ ‖c-b‖ ‖c-a‖)`.
///
/// Returns 0 with `degenerate = true` when two of the points coincide.
pub fn curvature(a: Point2, b: Point2, c: Point2) -> Curvature {
    let (k, _) = curvature_with_gradient(a, b, c);
    k
}

/// Menger curvature and its gradient with respect to `a`, `b`, `c`.
pub fn curvature_with_gradient(a: Point2, b: Point2, c: Point2) -> (Curvature, [Point2; 3]) {
    let u = b - a;
    let v = c - b;
    let w = c - a;
    let (lu, lv, lw) = (u.norm(), v.norm(), w.norm());
    if lu < TRIPLET_EPS || lv < TRIPLET_EPS || lw < TRIPLET_EPS {
        return (
            Curvature {
                value: 0.0,
                degenerate: true,
            },
            [Point2::ZERO; 3],
        );
    }
    let cross = u.cross(v);
    let denom = lu * lv * lw;
    let k = 2.0 * cross / denom;
    // dk = 2 dX / D - k (d|u|/|u| + d|v|/|v| + d|w|/|w|)
    let dx_du = Point2::new(v.y, -v.x);
    let dx_dv = Point2::new(-u.y, u.x);
    let gu = dx_du * (2.0 / denom) - u * (k / (lu * lu));
    let gv = dx_dv * (2.0 / denom) - v * (k / (lv * lv));
    let gw = -(w * (k / (lw * lw)));
    // u = b - a, v = c - b, w = c - a
    let ga = -gu - gw;
    let gb = gu - gv;
    let gc = gv + gw;
    (
        Curvature {
            value: k,
            degenerate: false,
        },
        [ga, gb, gc],
    )
}

/// Per-sample curvature; the two end samples copy their neighbour.
pub fn sample_curvatures(points: &[Point2]) -> Vec<f64> {
    let n = points.len();
    if n < 3 {
        return vec![0.0; n];
    }
    let mut k = vec![0.0; n];
    for i in 1..n - 1 {
        k[i] = curvature(points[i - 1], points[i], points[i + 1]).value;
    }
    k[0] = k[1];
    k[n - 1] = k[n - 2];
    k
}

/// Row-major Jacobian of dense points w.r.t. control coordinates.
///
/// Row `2i` is `∂x_i/∂θ`, row `2i+1` is `∂y_i/∂θ`, with
/// `θ = (c_0.x, c_0.y, c_1.x, …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathJacobian {
    n_dense: usize,
    n_params: usize,
    data: Vec<f64>,
}

impl PathJacobian {
    fn zeros(n_dense: usize, n_ctrl: usize) -> Self {
        let n_params = 2 * n_ctrl;
        Self {
            n_dense,
            n_params,
            data: vec![0.0; 2 * n_dense * n_params],
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    #[inline]
    pub fn row(&self, dense: usize, axis: usize) -> &[f64] {
        let r = 2 * dense + axis;
        &self.data[r * self.n_params..(r + 1) * self.n_params]
    }

    #[inline]
    fn row_mut(&mut self, dense: usize, axis: usize) -> &mut [f64] {
        let r = 2 * dense + axis;
        &mut self.data[r * self.n_params..(r + 1) * self.n_params]
    }

    /// `∂p_dense / ∂c_ctrl` as a 2×2 matrix `[[∂x/∂cx, ∂x/∂cy], [∂y/∂cx, ∂y/∂cy]]`.
    pub fn block(&self, dense: usize, ctrl: usize) -> [[f64; 2]; 2] {
        let c = 2 * ctrl;
        let rx = self.row(dense, 0);
        let ry = self.row(dense, 1);
        [[rx[c], rx[c + 1]], [ry[c], ry[c + 1]]]
    }

    /// Pull a per-dense-point gradient back to control coordinates: `Jᵀ g`.
    pub fn pullback(&self, dense_grad: &[Point2]) -> Vec<f64> {
        assert_eq!(dense_grad.len(), self.n_dense);
        let mut out = vec![0.0; self.n_params];
        for (i, g) in dense_grad.iter().enumerate() {
            for (o, (jx, jy)) in out
                .iter_mut()
                .zip(self.row(i, 0).iter().zip(self.row(i, 1)))
            {
                *o += g.x * jx + g.y * jy;
            }
        }
        out
    }
}

struct FineSample {
    seg: usize,
    u: f64,
    pos: Point2,
    /// Local derivatives, `[axis][0..8 control coords, 8 = u]`.
    local: [[f64; 9]; 2],
}

fn fine_samples_per_segment(n_ctrl: usize, n_dense: usize) -> usize {
    let segs = (n_ctrl - 1).max(1);
    (8 * n_dense).div_ceil(segs).max(16)
}

/// Interpolate without computing derivatives.
pub fn interpolate(ctrl: &ControlPolygon, n_dense: usize) -> Result<DensePath, SplineError> {
    interpolate_impl(ctrl, n_dense, false).map(|(p, _)| p)
}

/// Interpolate and return `∂(dense points)/∂(control points)`.
pub fn interpolate_with_jacobian(
    ctrl: &ControlPolygon,
    n_dense: usize,
) -> Result<(DensePath, PathJacobian), SplineError> {
    interpolate_impl(ctrl, n_dense, true).map(|(p, j)| (p, j.expect("jacobian requested")))
}

fn interpolate_impl(
    ctrl: &ControlPolygon,
    n_dense: usize,
    want_jac: bool,
) -> Result<(DensePath, Option<PathJacobian>), SplineError> {
    let m = ctrl.len();
    if n_dense <= m || n_dense < 2 {
        return Err(SplineError::TooFewDenseSamples { n_dense, n_ctrl: m });
    }
    let n_params = 2 * m;
    let per_seg = fine_samples_per_segment(m, n_dense);

    // Pass 1: uniform parameter samples.
    let mut fine = Vec::with_capacity(ctrl.segments() * per_seg + 1);
    for seg in 0..ctrl.segments() {
        let pts = ctrl.segment_controls(seg);
        let count = if seg + 1 == ctrl.segments() {
            per_seg + 1
        } else {
            per_seg
        };
        for k in 0..count {
            let u = k as f64 / per_seg as f64;
            let [x, y] = segment_point(&pts, u);
            fine.push(FineSample {
                seg,
                u,
                pos: Point2::new(x.v, y.v),
                local: [x.d, y.d],
            });
        }
    }

    // Cumulative chord length, and its gradient when requested.
    let nf = fine.len();
    let mut s = vec![0.0; nf];
    let mut ds = if want_jac {
        vec![0.0; nf * n_params]
    } else {
        Vec::new()
    };
    for k in 0..nf - 1 {
        let d = fine[k + 1].pos - fine[k].pos;
        let len = d.norm();
        s[k + 1] = s[k] + len;
        if want_jac {
            let (head, tail) = ds.split_at_mut((k + 1) * n_params);
            let next = &mut tail[..n_params];
            next.copy_from_slice(&head[k * n_params..]);
            if len > 0.0 {
                let e = d * (1.0 / len);
                scatter_local(ctrl, &fine[k + 1], e, 1.0, next);
                scatter_local(ctrl, &fine[k], e, -1.0, next);
            }
        }
    }
    let total = s[nf - 1];

    // Pass 2: uniform arc-length targets mapped back to curve parameters.
    let mut points = Vec::with_capacity(n_dense);
    let mut jac = want_jac.then(|| PathJacobian::zeros(n_dense, m));
    let mut k = 0usize;
    let mut dr = vec![0.0; if want_jac { n_params } else { 0 }];
    for i in 0..n_dense {
        if i == 0 || i == n_dense - 1 {
            let (p, c) = if i == 0 {
                (ctrl.first(), 0)
            } else {
                (ctrl.last(), m - 1)
            };
            points.push(p);
            if let Some(j) = jac.as_mut() {
                j.row_mut(i, 0)[2 * c] = 1.0;
                j.row_mut(i, 1)[2 * c + 1] = 1.0;
            }
            continue;
        }
        let frac = i as f64 / (n_dense - 1) as f64;
        let target = total * frac;
        while k + 2 < nf && s[k + 1] <= target {
            k += 1;
        }
        let a = &fine[k];
        let b = &fine[k + 1];
        let span = s[k + 1] - s[k];
        let r = if span > 0.0 {
            ((target - s[k]) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let u_end = if b.seg == a.seg { b.u } else { 1.0 };
        let du = u_end - a.u;
        let u = a.u + r * du;
        let pts = ctrl.segment_controls(a.seg);
        let [x, y] = segment_point(&pts, u);
        points.push(Point2::new(x.v, y.v));

        if let Some(j) = jac.as_mut() {
            let sample = FineSample {
                seg: a.seg,
                u,
                pos: Point2::new(x.v, y.v),
                local: [x.d, y.d],
            };
            scatter_local(ctrl, &sample, Point2::new(1.0, 0.0), 1.0, j.row_mut(i, 0));
            scatter_local(ctrl, &sample, Point2::new(0.0, 1.0), 1.0, j.row_mut(i, 1));
            if span > 0.0 {
                // r = (frac·L - s_k) / (s_{k+1} - s_k)
                let dl = &ds[(nf - 1) * n_params..nf * n_params];
                let dk = &ds[k * n_params..(k + 1) * n_params];
                let dk1 = &ds[(k + 1) * n_params..(k + 2) * n_params];
                for q in 0..n_params {
                    dr[q] = ((frac * dl[q] - dk[q]) - r * (dk1[q] - dk[q])) / span;
                }
                let (dxdu, dydu) = (x.d[8] * du, y.d[8] * du);
                for (q, drq) in dr.iter().enumerate() {
                    j.row_mut(i, 0)[q] += dxdu * drq;
                    j.row_mut(i, 1)[q] += dydu * drq;
                }
            }
        }
    }

    let path = DensePath::from_points(points);
    Ok((path, jac))
}

/// Add `scale · dirᵀ · ∂pos/∂(local controls)` into a full parameter row.
#[inline]
fn scatter_local(
    ctrl: &ControlPolygon,
    sample: &FineSample,
    dir: Point2,
    scale: f64,
    row: &mut [f64],
) {
    for (l, local) in ctrl.stencil(sample.seg).iter().enumerate() {
        let d = [0, 1].map(|axis| {
            let q = 2 * l + axis;
            scale * (dir.x * sample.local[0][q] + dir.y * sample.local[1][q])
        });
        for &(c, m) in &local.deps {
            for axis in 0..2 {
                row[2 * c + axis] += d[0] * m[0][axis] + d[1] * m[1][axis];
            }
        }
    }
}

/// Outcome of comparing the analytic path Jacobian with finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianReport {
    /// `max |J - J_fd| / max |J_fd|` over interior control columns.
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

/// Check the implemented derivative of each dense point with respect to each
/// interior control point against central finite differences.
pub fn path_jacobian_check(
    ctrl: &ControlPolygon,
    n_dense: usize,
) -> Result<JacobianReport, SplineError> {
    let (_, jac) = interpolate_with_jacobian(ctrl, n_dense)?;
    let m = ctrl.len();
    let h = 1e-6;
    let mut max_abs: f64 = 0.0;
    let mut max_fd: f64 = 0.0;
    for c in 1..m - 1 {
        for axis in 0..2 {
            let shifted = |delta: f64| {
                let mut pts = ctrl.points().to_vec();
                if axis == 0 {
                    pts[c].x += delta;
                } else {
                    pts[c].y += delta;
                }
                interpolate(&ControlPolygon { points: pts }, n_dense).map(|p| p.points)
            };
            let plus = shifted(h)?;
            let minus = shifted(-h)?;
            for i in 0..n_dense {
                let fd = (plus[i] - minus[i]) * (0.5 / h);
                let an = Point2::new(jac.row(i, 0)[2 * c + axis], jac.row(i, 1)[2 * c + axis]);
                max_abs = max_abs.max((fd.x - an.x).abs()).max((fd.y - an.y).abs());
                max_fd = max_fd.max(fd.x.abs()).max(fd.y.abs());
            }
        }
    }
    Ok(JacobianReport {
        max_rel_error: max_abs / max_fd.max(f64::MIN_POSITIVE),
        max_abs_error: max_abs,
    })
}
