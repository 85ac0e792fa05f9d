mod common;

use insitu_core::design::{assign_all, Configuration, Design, ParamValue};
use insitu_core::dsl::builtin;
use insitu_core::estimators::*;
use insitu_core::geometry::generate_mesh;
use insitu_core::math::Vec3;
use proptest::prelude::*;

fn configure(id: &str, values: &[(&str, f64)]) -> (&'static Design, Configuration) {
    let d = builtin(id).unwrap();
    let a: Vec<(String, ParamValue)> = values.iter().map(|(n, v)| (n.to_string(), ParamValue::Number(*v))).collect();
    let cfg = assign_all(d, &d.default_configuration(), &a).unwrap().unwrap();
    (d, cfg)
}

fn check(id: &str, values: &[(&str, f64)], clause: Clause) -> ClauseResult {
    let (d, cfg) = configure(id, values);
    let mesh = generate_mesh(d, &cfg).unwrap();
    let spec = RequirementSpec { clauses: vec![clause] };
    check_requirements(d, &cfg, &mesh, None, &spec).unwrap().remove(0)
}

#[test]
fn l1_max_height() {
    let c = Clause::MaxHeight { limit: 0.40 };
    assert!(check("lampshade_drum", &[("height", 0.38)], c.clone()).passed);
    let r = check("lampshade_drum", &[("height", 0.45)], c);
    assert!(!r.passed);
    assert!((r.measured - 0.45).abs() < 1e-9);
}

#[test]
fn l2_diameter_within_bedside_table() {
    let table = |w: f64| Clause::MaxExtent {
        axis: Axis::X,
        limit: Length::Between { between: [Vec3::new(0.0, 0.6, 0.0), Vec3::new(w, 0.6, 0.0)] },
    };
    assert!(check("lampshade_drum", &[("diameter", 0.30)], table(0.45)).passed);
    assert!(!check("lampshade_drum", &[("diameter", 0.50)], table(0.45)).passed);
}

#[test]
fn l3_stable() {
    assert!(check("lampshade_lean", &[], Clause::Stable).passed);
    let r = check("lampshade_lean", &[("height", 0.5), ("lean", 0.3), ("diameter", 0.28)], Clause::Stable);
    assert!(!r.passed && r.measured < 0.0);
}

#[test]
fn l4_candle_fits() {
    let candle = Clause::FitsInsideCavity { radius: 0.02, height: 0.15 };
    let r = check("lampshade_drum", &[], candle.clone());
    assert!(r.passed, "{r:?}");
    assert!(!check("lampshade_drum", &[("height", 0.15), ("diameter", 0.15)], Clause::FitsInsideCavity { radius: 0.02, height: 0.2 }).passed);
    assert!(!check("vase_slim", &[("diameter", 0.04)], candle).passed);
}

#[test]
fn b2_bench_not_longer_than_table() {
    let c = Clause::MaxExtent { axis: Axis::X, limit: Length::Value(1.6) };
    assert!(check("bench", &[("width", 1.2)], c.clone()).passed);
    assert!(!check("bench", &[("width", 1.8)], c).passed);
}

#[test]
fn b3_armrest_aligned_with_side_table() {
    let c = Clause::Align { param: "armrest_height".into(), target: Length::Value(0.70), tol: 0.01 };
    assert!(check("bench", &[("armrest_height", 0.70)], c.clone()).passed);
    let r = check("bench", &[("armrest_height", 0.715)], c);
    assert!(!r.passed);
    assert!((r.excess - 0.005).abs() < 1e-12);
}

#[test]
fn cavity_clause_is_not_defined_for_bookholders() {
    let (d, cfg) = configure("bookholder", &[]);
    let mesh = generate_mesh(d, &cfg).unwrap();
    let spec = RequirementSpec { clauses: vec![Clause::FitsInsideCavity { radius: 0.01, height: 0.01 }] };
    assert!(matches!(
        check_requirements(d, &cfg, &mesh, None, &spec),
        Err(RequirementError::UnknownClauseForDesignKind { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn passing_max_height_means_short_enough(h in 0.15..0.6f64, limit in 0.1..0.7f64, y in -1.0..2.0f64) {
        let (d, mut cfg) = configure("lampshade_cone", &[("height", h), ("diameter", 0.3)]);
        cfg.pose.position = Vec3::new(0.2, y, -0.1);
        let mesh = generate_mesh(d, &cfg).unwrap();
        let spec = RequirementSpec { clauses: vec![Clause::MaxHeight { limit }] };
        let r = check_requirements(d, &cfg, &mesh, None, &spec).unwrap().remove(0);
        let ys = mesh.vertices.iter().map(|v| v.y);
        let measured = ys.clone().fold(f64::NEG_INFINITY, f64::max) - ys.fold(f64::INFINITY, f64::min);
        if r.passed {
            prop_assert!(measured <= limit);
        }
    }
}
