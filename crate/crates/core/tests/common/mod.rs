#![allow(dead_code)]

use insitu_core::design::{set_parameter, Configuration, Design, EditMode, ParamKind, ParamValue};
use insitu_core::geometry::TriangleMesh;
use insitu_core::math::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Axis-aligned horizontal quad at height `y`, two triangles.
pub fn quad(y: f64, x0: f64, z0: f64, x1: f64, z1: f64) -> TriangleMesh {
    let v = [Vec3::new(x0, y, z0), Vec3::new(x1, y, z0), Vec3::new(x1, y, z1), Vec3::new(x0, y, z1)];
    let mut m = TriangleMesh::new();
    m.push_part("quad", &v, &[[0, 2, 1], [0, 3, 2]]);
    m
}

/// Gridded floor of side `2·half` with Gaussian height noise.
pub fn noisy_floor(half: f64, step: f64, sigma: f64, rng: &mut impl Rng) -> TriangleMesh {
    let n = (2.0 * half / step).round() as usize;
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut v = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let y = if sigma > 0.0 { noise.sample(rng) } else { 0.0 };
            v.push(Vec3::new(-half + i as f64 * step, y, -half + j as f64 * step));
        }
    }
    let id = |i: usize, j: usize| (i * (n + 1) + j) as u32;
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            t.push([id(i, j), id(i, j + 1), id(i + 1, j + 1)]);
            t.push([id(i, j), id(i + 1, j + 1), id(i + 1, j)]);
        }
    }
    let mut m = TriangleMesh::new();
    m.push_part("floor", &v, &t);
    m
}

/// Vertical wall in the plane z = `z`.
pub fn wall(z: f64, x0: f64, x1: f64, height: f64) -> TriangleMesh {
    let v = [Vec3::new(x0, 0.0, z), Vec3::new(x1, 0.0, z), Vec3::new(x1, height, z), Vec3::new(x0, height, z)];
    let mut m = TriangleMesh::new();
    m.push_part("wall", &v, &[[0, 1, 2], [0, 2, 3]]);
    m
}

/// Floor plus four walls of a `size` square room.
pub fn room(size: f64, height: f64) -> TriangleMesh {
    let h = size / 2.0;
    let mut m = quad(0.0, -h, -h, h, h);
    for k in 0..4 {
        let w = wall(h, -h, h, height);
        let yaw = k as f64 * std::f64::consts::FRAC_PI_2;
        m.append(&w.posed(&Vec3::zeros(), yaw));
    }
    m
}

/// Floor with a table (top slab and four legs) standing on it.
pub fn floor_and_table(top_y: f64) -> TriangleMesh {
    let mut m = quad(0.0, -2.0, -2.0, 2.0, 2.0);
    m.push_cuboid("top", Vec3::new(-0.6, top_y - 0.03, -0.45), Vec3::new(0.6, top_y, 0.45));
    for (x, z) in [(-0.55, -0.4), (0.5, -0.4), (-0.55, 0.35), (0.5, 0.35)] {
        m.push_cuboid("leg", Vec3::new(x, 0.0, z), Vec3::new(x + 0.05, top_y - 0.03, z + 0.05));
    }
    m
}

/// Flat disc of `radius` at height `y`, fan triangulated.
pub fn disc(radius: f64, y: f64, segments: usize) -> TriangleMesh {
    let mut v = vec![Vec3::new(0.0, y, 0.0)];
    for k in 0..segments {
        let a = std::f64::consts::TAU * k as f64 / segments as f64;
        v.push(Vec3::new(radius * a.cos(), y, radius * a.sin()));
    }
    let t: Vec<[u32; 3]> = (0..segments as u32).map(|k| [0, 1 + (k + 1) % segments as u32, 1 + k]).collect();
    let mut m = TriangleMesh::new();
    m.push_part("disc", &v, &t);
    m
}

/// Seeded edit script over a design's numeric and boolean parameters.
/// Values overshoot the declared range by 20% on each side so that some
/// commits snap back; roughly one step in five is a preview.
pub fn edit_trace(design: &Design, seed: u64, steps: usize) -> Vec<(String, ParamValue, EditMode)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let editable: Vec<_> = design
        .parameters
        .iter()
        .filter(|p| matches!(p.kind, ParamKind::Continuous { .. } | ParamKind::Discrete { .. } | ParamKind::Boolean))
        .collect();
    (0..steps)
        .map(|_| {
            let p = editable[rng.gen_range(0..editable.len())];
            let value = match p.kind.numeric_range() {
                Some((lo, hi)) => {
                    let pad = 0.2 * (hi - lo);
                    ParamValue::Number(rng.gen_range(lo - pad..=hi + pad))
                }
                None => ParamValue::Bool(rng.gen()),
            };
            let mode = if rng.gen_bool(0.2) { EditMode::Preview } else { EditMode::Commit };
            (p.name.clone(), value, mode)
        })
        .collect()
}

/// Replays a trace directly against the design kernel.
pub fn replay_direct(design: &Design, trace: &[(String, ParamValue, EditMode)]) -> Configuration {
    let mut cfg = design.default_configuration();
    for (name, value, mode) in trace {
        let out = set_parameter(design, &cfg, name, value.clone(), *mode).unwrap();
        if let Some(c) = out.committed() {
            cfg = c.clone();
        }
    }
    cfg
}
