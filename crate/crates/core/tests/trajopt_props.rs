use approx::assert_relative_eq;
use proptest::prelude::*;

use trail::field::{gaussian_bump_field, GaussianBump, TerrainField};
use trail::spline::{interpolate, ControlPolygon};
use trail::trajopt::{
    objective, path_bumpiness, smin, smin_grad, speed_profile_soft, v_cap, v_pref, FootprintSpec,
    ObjectiveWeights, SpeedParams,
};
use trail::Point2;

const N_DENSE: usize = 60;

fn bumps_strategy() -> impl Strategy<Value = Vec<GaussianBump>> {
    prop::collection::vec(
        (0.0..10.0f64, -3.0..3.0f64, 0.1..0.9f64, 0.4..1.5f64).prop_map(|(x, y, a, s)| {
            GaussianBump {
                center: Point2::new(x, y),
                amplitude: a,
                sigma: s,
            }
        }),
        1..4,
    )
}

fn polygon_strategy() -> impl Strategy<Value = Vec<Point2>> {
    prop::collection::vec(-1.5..1.5f64, 4).prop_map(|ys| {
        let mut pts = vec![Point2::new(0.0, 0.0)];
        pts.extend(
            ys.iter()
                .enumerate()
                .map(|(i, &y)| Point2::new(2.0 * (i + 1) as f64, y)),
        );
        pts.push(Point2::new(10.0, 0.0));
        pts
    })
}

fn eval(points: Vec<Point2>, bumps: Vec<GaussianBump>) -> (f64, Vec<Point2>) {
    let field = gaussian_bump_field(bumps).unwrap();
    let ctrl = ControlPolygon::new(points).unwrap();
    objective(
        &ctrl,
        &field,
        &ObjectiveWeights::default(),
        &SpeedParams::default(),
        &FootprintSpec::default(),
        N_DENSE,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn objective_is_translation_invariant(pts in polygon_strategy(), bumps in bumps_strategy(), dx in -20.0..20.0f64, dy in -20.0..20.0f64) {
        let d = Point2::new(dx, dy);
        let (j0, g0) = eval(pts.clone(), bumps.clone());
        let moved_bumps = bumps.iter().map(|b| GaussianBump { center: b.center + d, ..*b }).collect();
        let (j1, g1) = eval(pts.iter().map(|&p| p + d).collect(), moved_bumps);
        assert_relative_eq!(j0, j1, max_relative = 1e-9);
        for (a, b) in g0.iter().zip(&g1) {
            assert_relative_eq!(a.x, b.x, epsilon = 1e-7, max_relative = 1e-6);
            assert_relative_eq!(a.y, b.y, epsilon = 1e-7, max_relative = 1e-6);
        }
    }

    #[test]
    fn objective_is_mirror_invariant(pts in polygon_strategy(), bumps in bumps_strategy()) {
        let flip = |p: Point2| Point2::new(p.x, -p.y);
        let (j0, g0) = eval(pts.clone(), bumps.clone());
        let mirrored = bumps.iter().map(|b| GaussianBump { center: flip(b.center), ..*b }).collect();
        let (j1, g1) = eval(pts.iter().copied().map(flip).collect(), mirrored);
        assert_relative_eq!(j0, j1, max_relative = 1e-9);
        for (a, b) in g0.iter().zip(&g1) {
            assert_relative_eq!(a.x, b.x, epsilon = 1e-7, max_relative = 1e-6);
            assert_relative_eq!(a.y, -b.y, epsilon = 1e-7, max_relative = 1e-6);
        }
    }

    #[test]
    fn smin_bounds_and_weights(a in -5.0..5.0f64, b in -5.0..5.0f64, tau in 0.01..2.0f64) {
        let s = smin(a, b, tau);
        prop_assert!(s <= a.min(b));
        prop_assert!(s >= a.min(b) - tau * std::f64::consts::LN_2 - 1e-12);
        let (v, wa, wb) = smin_grad(a, b, tau);
        prop_assert_eq!(v, s);
        prop_assert!((0.0..=1.0).contains(&wa) && (0.0..=1.0).contains(&wb));
        assert_relative_eq!(wa + wb, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn higher_alpha_sharpens_speed_contrast(lo in 0.05..0.45f64, hi in 0.55..0.95f64) {
        let ratio = |alpha| {
            let p = SpeedParams { alpha, eps_bump: 0.0, ..SpeedParams::default() };
            v_pref(hi, &p) / v_pref(lo, &p)
        };
        prop_assert!(ratio(2) < ratio(1));
        prop_assert!(ratio(3) < ratio(2));
        assert_relative_eq!(ratio(2), lo / hi, max_relative = 1e-12);
    }

    #[test]
    fn fused_speed_respects_both_caps(pts in polygon_strategy(), bumps in bumps_strategy()) {
        let field = gaussian_bump_field(bumps).unwrap();
        let path = interpolate(&ControlPolygon::new(pts).unwrap(), N_DENSE).unwrap();
        let b = path_bumpiness(&field, &path, &FootprintSpec::default());
        let p = SpeedParams::default();
        let prof = speed_profile_soft(&path, &b, &p);
        for i in 0..path.len() {
            prop_assert!(prof.v[i] > 0.0);
            prop_assert!(prof.v[i] <= prof.v_cap[i].min(prof.v_pref[i]));
            prop_assert!(prof.v_cap[i] <= p.v_max);
            assert_relative_eq!(prof.v_cap[i], v_cap(path.curvatures[i], &p), max_relative = 1e-12);
            assert_relative_eq!(prof.v_pref[i], v_pref(b[i], &p), max_relative = 1e-12);
        }
    }
}

#[test]
fn bumpier_field_raises_objective() {
    let pts: Vec<Point2> = (0..6).map(|i| Point2::new(2.0 * i as f64, 0.0)).collect();
    let bump = |a| {
        vec![GaussianBump {
            center: Point2::new(5.0, 0.0),
            amplitude: a,
            sigma: 1.0,
        }]
    };
    let mut last = f64::NEG_INFINITY;
    for a in [0.0, 0.2, 0.5, 0.9] {
        let (j, _) = eval(pts.clone(), bump(a));
        assert!(j > last, "amplitude {a}: {j} <= {last}");
        last = j;
    }
    let field = gaussian_bump_field(bump(0.5)).unwrap();
    assert!(field.eval(Point2::new(5.0, 0.0)).value > 0.49);
}
