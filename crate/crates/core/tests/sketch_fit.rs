use std::f64::consts::FRAC_PI_2;

use insitu_core::design::{EditOutcome, ParamValue};
use insitu_core::dsl::builtin;
use insitu_core::geometry::{CubicBezier, R_MIN};
use insitu_core::math::{Vec2, Vec3};
use insitu_core::sketch::{
    apply_curve, default_tolerance, fit_bezier_path, measure_deviation, project_points, project_stroke, FitResult,
    SketchError, Stroke, DEVIATION_SAMPLES,
};
use proptest::prelude::*;

/// Brute-force Bernstein evaluation, independent of the library.
fn bernstein_point(c: &[Vec2; 4], t: f64) -> Vec2 {
    let s = 1.0 - t;
    c[0] * (s * s * s) + c[1] * (3.0 * s * s * t) + c[2] * (3.0 * s * t * t) + c[3] * (t * t * t)
}

fn seg_dist(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let t = if ab.norm_squared() > 0.0 { ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

fn dist_to_polyline(p: &Vec2, poly: &[Vec2]) -> f64 {
    poly.windows(2).map(|w| seg_dist(p, &w[0], &w[1])).fold(f64::INFINITY, f64::min)
}

/// Hausdorff-style distance between two densely sampled curves.
fn curve_distance(a: &[Vec2], b: &[Vec2]) -> f64 {
    let ab = a.iter().map(|p| dist_to_polyline(p, b)).fold(0.0, f64::max);
    let ba = b.iter().map(|p| dist_to_polyline(p, a)).fold(0.0, f64::max);
    ab.max(ba)
}

fn diag(pts: &[Vec2]) -> f64 {
    let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
    for p in pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm()
}

fn dense_fit(fit: &FitResult, n: usize) -> Vec<Vec2> {
    fit.path.sample(n)
}

#[test]
fn recovers_single_cubic() {
    let c = [Vec2::new(0.0, 0.0), Vec2::new(0.05, 0.2), Vec2::new(0.25, 0.25), Vec2::new(0.3, 0.05)];
    let pts: Vec<Vec2> = (0..64).map(|i| bernstein_point(&c, i as f64 / 63.0)).collect();
    let fit = fit_bezier_path(&pts, 4, 1e-3 * diag(&pts)).unwrap();
    assert!(fit.max_deviation <= 1e-3 * diag(&pts));
    let source: Vec<Vec2> = (0..4001).map(|i| bernstein_point(&c, i as f64 / 4000.0)).collect();
    let err = curve_distance(&dense_fit(&fit, 2000), &source);
    assert!(err <= 1e-3 * diag(&pts), "deviation {err}");
}

#[test]
fn quarter_circle_with_two_segments() {
    let r = 0.1;
    let pts: Vec<Vec2> = (0..64)
        .map(|i| {
            let a = FRAC_PI_2 * i as f64 / 63.0;
            Vec2::new(r * a.cos(), r * a.sin())
        })
        .collect();
    let fit = fit_bezier_path(&pts, 2, 0.0).unwrap();
    assert!(fit.path.len() <= 2);
    let worst = dense_fit(&fit, 4000).iter().map(|p| (p.norm() - r).abs()).fold(0.0, f64::max);
    assert!(worst <= 3e-4, "analytic arc deviation {worst}");
    assert!(fit.max_deviation <= 3e-4, "reported {}", fit.max_deviation);
}

#[test]
fn identical_strokes_fit_bit_identically() {
    let pts: Vec<Vec2> = (0..64).map(|i| Vec2::new(i as f64 * 0.01, (i as f64 * 0.3).sin() * 0.05)).collect();
    let a = fit_bezier_path(&pts, 4, 1e-4).unwrap();
    let b = fit_bezier_path(&pts, 4, 1e-4).unwrap();
    assert_eq!(a.max_deviation.to_bits(), b.max_deviation.to_bits());
    let bits = |f: &FitResult| f.path.control_points().iter().flat_map(|p| [p.x.to_bits(), p.y.to_bits()]).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn degenerate_and_short_inputs() {
    let s = Stroke { points: vec![Vec3::new(0.2, 0.2, 0.2); 5], timestamps: vec![], view_dir: -Vec3::z() };
    assert_eq!(project_stroke(&s), Err(SketchError::DegenerateStroke));
    assert!(matches!(fit_bezier_path(&[Vec2::zeros(); 2], 2, 0.1), Err(SketchError::InsufficientPoints(2))));
}

fn lampshade_stroke(x_offset: f64) -> Stroke {
    let points = (0..40)
        .map(|i| {
            let t = i as f64 / 39.0;
            Vec3::new(x_offset + 0.15 - 0.05 * t, 0.3 * t, 0.5)
        })
        .collect();
    Stroke { points, timestamps: (0..40).map(|i| i as f64 * 0.01).collect(), view_dir: -Vec3::z() }
}

#[test]
fn valid_fit_commits_on_lampshade() {
    let d = builtin("lampshade_cone").unwrap();
    let cfg = d.default_configuration();
    let pts = insitu_core::sketch::project_stroke_about(&lampshade_stroke(0.0), &Vec3::zeros()).unwrap();
    let fit = fit_bezier_path(&pts, 4, default_tolerance(&pts)).unwrap();
    let applied = apply_curve(d, &cfg, "profile", &fit).unwrap();
    let EditOutcome::Committed { config, .. } = &applied.outcome else { panic!("{:?}", applied.outcome) };
    assert!(!applied.fit.modified_by_constraints);
    let ParamValue::Curve(p) = &config.values["profile"] else { panic!() };
    let (lo, hi) = p.control_bounds();
    assert!(lo.y.abs() < 1e-12);
    assert!((hi.y - cfg.number("height").unwrap()).abs() < 1e-9);
    insitu_core::geometry::generate_mesh(d, config).unwrap();
}

#[test]
fn axis_crossing_is_clamped() {
    let d = builtin("vase_classic").unwrap();
    let cfg = d.default_configuration();
    let pts: Vec<Vec2> = (0..64)
        .map(|i| {
            let t = i as f64 / 63.0;
            Vec2::new(0.08 - 0.3 * t + 0.25 * t * t, 0.25 * t)
        })
        .collect();
    let fit = fit_bezier_path(&pts, 4, default_tolerance(&pts)).unwrap();
    let applied = apply_curve(d, &cfg, "profile", &fit).unwrap();
    assert!(applied.fit.modified_by_constraints);
    assert!(applied.fit.path.control_points().iter().all(|p| p.x >= R_MIN));
    assert!(matches!(applied.outcome, EditOutcome::Committed { .. }));
}

#[test]
fn non_curve_parameter_is_kind_mismatch() {
    let d = builtin("vase_classic").unwrap();
    let pts: Vec<Vec2> = (0..8).map(|i| Vec2::new(0.05, i as f64 * 0.01)).collect();
    let fit = fit_bezier_path(&pts, 1, 1e-3).unwrap();
    let e = apply_curve(d, &d.default_configuration(), "height", &fit).unwrap_err();
    assert!(matches!(e, SketchError::Design(insitu_core::design::DesignError::KindMismatch { .. })));
}

#[test]
fn upside_down_stroke_is_normalized() {
    let c = [Vec2::new(0.05, 0.3), Vec2::new(0.08, 0.2), Vec2::new(0.08, 0.1), Vec2::new(0.05, 0.0)];
    let fit = FitResult {
        path: insitu_core::geometry::BezierPath::new(vec![CubicBezier::new(c[0], c[1], c[2], c[3])]).unwrap(),
        max_deviation: 0.0,
        modified_by_constraints: false,
    };
    let d = builtin("vase_slim").unwrap();
    let applied = apply_curve(d, &d.default_configuration(), "profile", &fit).unwrap();
    assert!(applied.fit.path.start().y < applied.fit.path.end().y);
}

fn wavy(seed: &[f64]) -> Vec<Vec2> {
    (0..64)
        .map(|i| {
            let t = i as f64 / 63.0;
            let y = seed.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * 3.0 * t).sin()).sum::<f64>();
            Vec2::new(t * 0.4, y * 0.1)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn planar_projection_is_isometric(
        pts in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..20),
        yaw in 0.0..6.28f64,
        pitch in -1.2..1.2f64,
    ) {
        let view = Vec3::new(yaw.sin() * pitch.cos(), pitch.sin(), -yaw.cos() * pitch.cos());
        let up = Vec3::y();
        let v = (up - view * up.dot(&view)).normalize();
        let u = view.cross(&v);
        let world: Vec<Vec3> = pts.iter().map(|(a, b)| u * *a + v * *b + view * 0.7).collect();
        let flat = project_points(&world, &view, &Vec3::zeros()).unwrap();
        for i in 0..world.len() {
            for j in 0..world.len() {
                let d3 = (world[i] - world[j]).norm();
                let d2 = (flat[i] - flat[j]).norm();
                prop_assert!((d3 - d2).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fit_invariants(a in prop::collection::vec(-1.0..1.0f64, 1..4), budget in 1usize..6) {
        let pts = wavy(&a);
        let tol = default_tolerance(&pts) * 0.1;
        let fit = fit_bezier_path(&pts, budget, tol).unwrap();
        prop_assert!(fit.path.len() <= budget);
        prop_assert_eq!(fit.path.start(), pts[0]);
        prop_assert_eq!(fit.path.end(), pts[63]);
        // Deviation soundness against an independent dense measurement.
        let dense = fit.path.sample(DEVIATION_SAMPLES);
        let measured = dense.iter().map(|q| dist_to_polyline(q, &pts)).fold(0.0, f64::max);
        prop_assert!(fit.max_deviation >= measured - 1e-9);
        prop_assert!(fit.max_deviation >= measure_deviation(&fit.path, &pts) - 1e-12);
        // Monotone improvement with budget.
        let more = fit_bezier_path(&pts, budget + 1, tol).unwrap();
        prop_assert!(more.max_deviation <= fit.max_deviation);
    }

    #[test]
    fn samples_stay_in_control_hull(c in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4)) {
        let c: Vec<Vec2> = c.into_iter().map(|(x, y)| Vec2::new(x, y)).collect();
        let b = CubicBezier::new(c[0], c[1], c[2], c[3]);
        let hull = insitu_core::math::convex_hull_2d(&c);
        for k in 0..=50 {
            let p = b.point_at(k as f64 / 50.0);
            if hull.len() >= 3 {
                prop_assert!(insitu_core::math::signed_distance_to_convex_polygon(&p, &hull) >= -1e-9);
            } else {
                let d = hull.windows(2).map(|w| seg_dist(&p, &w[0], &w[1])).fold(f64::INFINITY, f64::min);
                prop_assert!(hull.len() < 2 || d < 1e-9);
            }
        }
    }
}
