mod common;

use common::*;
use insitu_core::environment::{
    detect_planes, load_scene, write_obj, Bvh, EnvironmentError, ScanFormat, T_MIN,
};
use insitu_core::math::{Vec3, UP};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn floor_quad_obj_gives_one_level_plane() {
    let obj = "v -1 0 -1\nv 1 0 -1\nv 1 0 1\nv -1 0 1\nf 1 3 2\nf 1 4 3\n";
    let scene = load_scene(obj.as_bytes(), ScanFormat::Obj).unwrap();
    assert_eq!(scene.planes.len(), 1);
    assert!((scene.planes[0].normal - UP).norm() <= 1e-6);
    assert_eq!(scene.accel.triangle_count(), scene.mesh.triangles.len());
}

#[test]
fn empty_obj_is_empty_scan() {
    assert_eq!(load_scene(b"", ScanFormat::Obj).unwrap_err(), EnvironmentError::EmptyScan);
    assert_eq!(load_scene(b"v 0 0 0\n", ScanFormat::Obj).unwrap_err(), EnvironmentError::EmptyScan);
}

#[test]
fn room_has_exactly_the_floor() {
    let scene = load_scene(write_obj(&room(4.0, 2.5)).as_bytes(), ScanFormat::Obj).unwrap();
    assert_eq!(scene.planes.len(), 1);
    assert!(scene.planes[0].offset.abs() < 1e-3);
    assert!(scene.planes[0].normal.angle(&UP) < 1e-3);
}

#[test]
fn noisy_floor_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = noisy_floor(1.5, 0.05, 0.001, &mut rng);
    let planes = detect_planes(&m, 5);
    assert!(!planes.is_empty());
    let p = &planes[0];
    assert!(p.offset.abs() <= 0.002, "offset {}", p.offset);
    assert!(p.normal.angle(&UP).to_degrees() <= 1.0);
}

#[test]
fn wall_only_has_no_planes() {
    assert!(detect_planes(&wall(0.0, -1.0, 1.0, 2.5), 0).is_empty());
}

#[test]
fn floor_and_table_top() {
    let planes = detect_planes(&floor_and_table(0.72), 9);
    assert_eq!(planes.len(), 2, "{planes:?}");
    let mut heights: Vec<f64> = planes.iter().map(|p| p.offset / p.normal.y).collect();
    heights.sort_by(f64::total_cmp);
    assert!(heights[0].abs() <= 0.003);
    assert!((heights[1] - 0.72).abs() <= 0.003);
}

#[test]
fn detection_is_deterministic_per_seed() {
    let m = floor_and_table(0.72);
    assert_eq!(detect_planes(&m, 77), detect_planes(&m, 77));
}

#[test]
fn offsets_survive_vertex_reordering() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = noisy_floor(1.0, 0.1, 0.001, &mut rng);
    let n = m.vertices.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut inv = vec![0u32; n];
    let mut shuffled = m.clone();
    for (new, &old) in perm.iter().enumerate() {
        shuffled.vertices[new] = m.vertices[old];
        inv[old] = new as u32;
    }
    for t in &mut shuffled.triangles {
        *t = t.map(|i| inv[i as usize]);
    }
    let a = detect_planes(&m, 4);
    let b = detect_planes(&shuffled, 4);
    assert_eq!(a.len(), b.len());
    for (p, q) in a.iter().zip(&b) {
        assert!((p.offset - q.offset).abs() <= 1e-3);
    }
}

#[test]
fn downward_ray_hits_floor_at_unit_distance() {
    let scene = load_scene(write_obj(&room(4.0, 2.5)).as_bytes(), ScanFormat::Obj).unwrap();
    let h = scene.raycast(&Vec3::new(0.0, 1.0, 0.0), &-UP, 10.0).unwrap();
    assert!((h.t - 1.0).abs() < 1e-12);
    assert!(scene.raycast(&Vec3::new(0.0, 1.0, 0.0), &UP, 1.0).is_none());
}

/// Möller–Trumbore, independent of the library's watertight test.
fn moller_trumbore(o: &Vec3, d: &Vec3, tri: &[Vec3; 3]) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 {
        return None;
    }
    let s = o - tri[0];
    let u = s.dot(&p) / det;
    let q = s.cross(&e1);
    let v = d.dot(&q) / det;
    if u < 0.0 || v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(&q) / det)
}

fn random_scene(rng: &mut impl Rng, n: usize) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let mut v = Vec::new();
    let mut t = Vec::new();
    for k in 0..n {
        let c = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        for _ in 0..3 {
            v.push(c + Vec3::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)));
        }
        let b = 3 * k as u32;
        t.push([b, b + 1, b + 2]);
    }
    (v, t)
}

fn unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let d = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = d.norm();
        if n > 0.1 && n <= 1.0 {
            return d / n;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bvh_matches_brute_force(seed in any::<u64>(), n in 1usize..400) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (v, t) = random_scene(&mut rng, n);
        let bvh = Bvh::build(&v, &t);
        let tris: Vec<[Vec3; 3]> = t.iter().map(|f| f.map(|i| v[i as usize])).collect();
        for _ in 0..200 {
            let o = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let d = unit(&mut rng);
            let max_t = rng.gen_range(0.5..5.0);
            let fast = bvh.raycast(&o, &d, max_t);
            prop_assert_eq!(fast, bvh.raycast_brute_force(&o, &d, max_t));
            // Independent oracle: nearest Möller–Trumbore hit in range.
            let oracle = tris.iter().enumerate()
                .filter_map(|(i, tri)| moller_trumbore(&o, &d, tri).filter(|&s| s > T_MIN && s < max_t).map(|s| (s, i)))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match (fast, oracle) {
                (Some(h), Some((s, i))) => {
                    prop_assert!((h.t - s).abs() <= 1e-9);
                    let other = tris[h.triangle_id];
                    prop_assert!(i == h.triangle_id || (moller_trumbore(&o, &d, &other).unwrap() - s).abs() <= 1e-9);
                }
                (None, None) => {}
                // Grazing hits within rounding of an edge may legitimately differ.
                (a, b) => prop_assert!(false, "mismatch {:?} vs {:?}", a, b),
            }
        }
    }
}
