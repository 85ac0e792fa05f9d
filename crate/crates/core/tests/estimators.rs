mod common;

use common::*;
use insitu_core::design::{assign_all, ParamValue};
use insitu_core::dsl::builtin;
use insitu_core::environment::{EnvironmentScene, SupportPlane};
use insitu_core::estimators::*;
use insitu_core::geometry::{generate_mesh, lathe::LatheSpec, BezierPath, CubicBezier, TriangleMesh};
use insitu_core::math::{Vec2, Vec3};
use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn floor() -> SupportPlane {
    SupportPlane::horizontal(0.0)
}

/// Box with its top face shifted by `shear` along x (an oblique prism).
pub fn prism(w: f64, h: f64, d: f64, shear: f64) -> TriangleMesh {
    let mut m = TriangleMesh::new();
    m.push_cuboid("prism", Vec3::new(-w / 2.0, 0.0, -d / 2.0), Vec3::new(w / 2.0, h, d / 2.0));
    m.map_vertices(|v| Vec3::new(v.x + shear * v.y / h, v.y, v.z))
}

#[test]
fn upright_box_is_stable_with_known_margin() {
    let m = prism(0.4, 0.5, 0.4, 0.0);
    let r = estimate_stability(&m, &floor()).unwrap();
    assert!(!r.toppled);
    assert!((r.quasi_static_margin - 0.195).abs() < 1e-9);
}

#[test]
fn tilted_column_topples() {
    let col = prism(0.02, 0.5, 0.02, 0.0);
    let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), 5f64.to_radians());
    let tilted = col.map_vertices(|v| rot * v);
    let r = estimate_stability(&tilted, &floor()).unwrap();
    assert!(r.toppled, "tilt {}", r.tilt_deg);
    assert!(r.quasi_static_margin < 0.0);
}

#[test]
fn cube_and_cylinder_margins() {
    let cube = prism(0.3, 0.3, 0.3, 0.0);
    assert!((quasi_static_stability(&cube, &floor()).unwrap() - (0.15 - 0.005)).abs() < 1e-12);
    // Cylinder r = 0.05 as a straight lathe, N = 64; inscribed radius r·cos(π/64).
    let profile = BezierPath::new(vec![CubicBezier::new(
        Vec2::new(0.05, 0.0),
        Vec2::new(0.05, 0.1),
        Vec2::new(0.05, 0.2),
        Vec2::new(0.05, 0.3),
    )])
    .unwrap();
    let spec = LatheSpec { profile, height: 0.3, diameter: None, wall: 0.0, closed_bottom: true, twist: 0.0, lean: 0.0, segments: 64 };
    let m = quasi_static_stability(&spec.mesh().unwrap(), &floor()).unwrap();
    assert!((m - 0.045).abs() < 2e-4, "{m}");
}

#[test]
fn com_over_polygon_vertex_is_eroded_negative() {
    // Square pyramid-free case: an L of two boxes whose COM lies over a base corner.
    let mut m = TriangleMesh::new();
    m.push_cuboid("base", Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.1, 0.01, 0.1));
    // Heavy block above the corner (0.1, 0.1); its weight dominates.
    m.push_cuboid("mass", Vec3::new(0.05, 0.02, 0.05), Vec3::new(0.15, 10.0, 0.15));
    let qs = quasi_static(&m, &floor()).unwrap();
    let com = qs.center_of_mass;
    assert!((com.x - 0.1).abs() < 1e-3 && (com.z - 0.1).abs() < 1e-3);
    assert!((qs.margin + 0.005).abs() < 2e-3, "{}", qs.margin);
}

#[test]
fn drops_are_bit_deterministic() {
    let m = prism(0.1, 0.4, 0.1, 0.08);
    let a = estimate_stability(&m, &floor()).unwrap();
    let b = estimate_stability(&m, &floor()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn prism_oracle_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut agree, mut counted) = (0, 0);
    for _ in 0..60 {
        let w: f64 = rng.gen_range(0.05..0.4);
        let h: f64 = rng.gen_range(0.1..0.8);
        let d = rng.gen_range(0.05..0.4);
        let s = rng.gen_range(0.0..(2.0 * w).min(0.9 * h));
        let m = prism(w, h, d, s);
        let r = estimate_stability(&m, &floor()).unwrap();
        if r.quasi_static_margin.abs() < 0.01 {
            continue;
        }
        counted += 1;
        if r.toppled == (r.quasi_static_margin < 0.0) {
            agree += 1;
        } else {
            eprintln!("disagree w={w:.3} h={h:.3} d={d:.3} s={s:.3} margin={:.4} tilt={:.1} settled={}", r.quasi_static_margin, r.tilt_deg, r.settled);
        }
    }
    eprintln!("{agree}/{counted}");
    assert!(agree as f64 >= 0.95 * counted as f64);
}

fn lean_mesh(height: f64, lean: f64, diameter: f64) -> (TriangleMesh, f64) {
    let d = builtin("lampshade_lean").unwrap();
    let set = |n: &str, v: f64| (n.to_string(), ParamValue::Number(v));
    let cfg = assign_all(d, &d.default_configuration(), &[set("height", height), set("lean", lean), set("diameter", diameter)])
        .unwrap()
        .unwrap();
    let m = generate_mesh(d, &cfg).unwrap();
    let qs = quasi_static_stability(&m, &floor()).unwrap();
    (m, qs)
}

#[test]
fn leaning_lampshade_topples_until_widened() {
    let (m, margin) = lean_mesh(0.5, 0.3, 0.28);
    let r = estimate_stability(&m, &floor()).unwrap();
    assert!(r.toppled && margin < 0.0, "margin {margin} tilt {}", r.tilt_deg);
    let (m, margin) = lean_mesh(0.5, 0.3, 0.5);
    let r = estimate_stability(&m, &floor()).unwrap();
    assert!(!r.toppled && margin > 0.0, "margin {margin} tilt {}", r.tilt_deg);
}

fn floor_scene(half: f64) -> EnvironmentScene {
    EnvironmentScene::from_mesh(quad(0.0, -half, -half, half, half), 1).unwrap()
}

fn light(x: f64, y: f64, z: f64) -> PointLight {
    PointLight { position: Vec3::new(x, y, z), intensity: 1.0 }
}

#[test]
fn disc_shadow_radius_follows_similar_triangles() {
    let scene = floor_scene(2.0);
    let extent = RasterExtent { min: Vec2::new(-0.5, -0.5), max: Vec2::new(0.5, 0.5) };
    let r = estimate_lighting(&disc(0.1, 1.0, 128), &scene, &light(0.0, 2.0, 0.0), Some(extent)).unwrap();
    let radius = (r.shadow_raster.shadow_area() / std::f64::consts::PI).sqrt();
    assert!((radius - 0.2).abs() <= 0.05 * 0.2, "{radius}");
    assert!(r.samples.iter().all(|s| s.illuminance >= 0.0 && (!s.occluded || s.illuminance == 0.0)));
    // Samples well inside the analytic shadow are occluded, well outside lit.
    for s in &r.samples {
        let rho = (s.point.x * s.point.x + s.point.z * s.point.z).sqrt();
        if rho < 0.18 {
            assert!(s.occluded);
        } else if rho > 0.22 {
            assert!(!s.occluded);
        }
    }
}

#[test]
fn no_design_means_no_shadow() {
    let r = estimate_lighting(&TriangleMesh::new(), &floor_scene(2.0), &light(0.3, 1.5, 0.0), None).unwrap();
    assert_eq!(r.shadow_coverage, 0.0);
    assert!(r.samples.iter().all(|s| !s.occluded));
    assert_eq!(r.shadow_raster.mean(), 0.0);
}

#[test]
fn slab_under_light_shadows_everything() {
    let slab = quad(1.0, -3.0, -3.0, 3.0, 3.0);
    let r = estimate_lighting(&slab, &floor_scene(2.0), &light(0.0, 1.5, 0.0), None).unwrap();
    assert_eq!(r.shadow_coverage, 1.0);
}

#[test]
fn light_inside_design_is_rejected() {
    let mut b = TriangleMesh::new();
    b.push_cuboid("box", Vec3::new(-0.2, 0.5, -0.2), Vec3::new(0.2, 1.5, 0.2));
    let e = estimate_lighting(&b, &floor_scene(1.0), &light(0.0, 1.0, 0.0), None).unwrap_err();
    assert_eq!(e, LightingError::LightInsideMesh);
}

#[test]
fn doubling_height_quarters_peak_illuminance() {
    let scene = floor_scene(1.0);
    let probe = estimate_lighting(&TriangleMesh::new(), &scene, &light(0.0, 1.0, 0.0), None).unwrap();
    // Put the light exactly above a sample so the peak is at normal incidence.
    let s = probe.samples.iter().min_by(|a, b| (a.point.x.hypot(a.point.z)).total_cmp(&b.point.x.hypot(b.point.z))).unwrap();
    let (x, z) = (s.point.x, s.point.z);
    let lo = estimate_lighting(&TriangleMesh::new(), &scene, &light(x, 1.0, z), None).unwrap();
    let hi = estimate_lighting(&TriangleMesh::new(), &scene, &light(x, 2.0, z), None).unwrap();
    assert_eq!(lo.samples.len(), hi.samples.len());
    let peak = |r: &LightingReport| r.samples.iter().map(|s| s.illuminance).fold(0.0, f64::max);
    assert!((peak(&hi) / peak(&lo) - 0.25).abs() <= 1e-6);
    for (a, b) in lo.samples.iter().zip(&hi.samples) {
        assert_eq!(a.point, b.point);
    }
}

#[test]
fn bigger_discs_never_shadow_less() {
    let scene = floor_scene(2.0);
    let mut last = 0.0;
    for r in [0.05, 0.1, 0.15, 0.2, 0.3] {
        let c = estimate_lighting(&disc(r, 1.0, 64), &scene, &light(0.0, 2.0, 0.0), None).unwrap().shadow_coverage;
        assert!(c >= last, "{r}: {c} < {last}");
        last = c;
    }
}

#[test]
fn raster_and_samples_agree_on_coverage() {
    let scene = floor_scene(2.0);
    let l = light(0.0, 2.0, 0.0);
    let r = estimate_lighting(&disc(0.25, 1.0, 128), &scene, &l, Some(RasterExtent::around(&l.position, 1.0))).unwrap();
    let from_raster = r.shadow_raster.disc_mean(Vec2::zeros(), 1.0);
    // Analytic: shadow radius 0.5 over a 1 m disc.
    assert!((r.shadow_coverage - 0.25).abs() < 0.01, "{}", r.shadow_coverage);
    assert!((from_raster - r.shadow_coverage).abs() < 0.01, "{from_raster} vs {}", r.shadow_coverage);
}

#[test]
fn lampshade_on_table_casts_a_shadow() {
    let d = builtin("lampshade_drum").unwrap();
    let mut cfg = d.default_configuration();
    cfg.pose.position = Vec3::new(0.0, 0.72, 0.0);
    let m = generate_mesh(d, &cfg).unwrap();
    let scene = EnvironmentScene::from_mesh(floor_and_table(0.72), 3).unwrap();
    let top = m.bbox().max.y;
    let r = estimate_lighting(&m, &scene, &light(0.0, top - 0.1, 0.0), None).unwrap();
    assert!(r.shadow_coverage > 0.0 && r.shadow_coverage < 1.0, "{}", r.shadow_coverage);
    assert!(r.mean_illuminance > 0.0);
    let pgm = r.shadow_raster.to_pgm();
    assert_eq!(pgm.len(), "P5\n256 256\n255\n".len() + 256 * 256);
}
