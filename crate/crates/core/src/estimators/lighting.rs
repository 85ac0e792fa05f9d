//! Point-light illuminance and shadow estimation on the environment surface.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{Bvh, EnvironmentScene, Ray};
use crate::geometry::TriangleMesh;
use crate::math::{Vec2, Vec3, UP};

pub const FINE_EDGE: f64 = 0.02;
pub const COARSE_EDGE: f64 = 0.10;
pub const FINE_RADIUS: f64 = 1.5;
pub const COVERAGE_RADIUS: f64 = 1.0;
pub const RASTER_SIZE: usize = 256;
const FLOOR_TOLERANCE: f64 = 0.005;
const LEVEL_COS: f64 = 0.984_807_753_012_208; // cos 10°

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LightingError {
    #[error("light is inside the design mesh")]
    LightInsideMesh,
    #[error("environment has no surface")]
    EmptyScene,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointLight {
    pub position: Vec3,
    #[serde(default = "unit_intensity")]
    pub intensity: f64,
}

fn unit_intensity() -> f64 {
    1.0
}

/// Top-down window in world (x, z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterExtent {
    pub min: Vec2,
    pub max: Vec2,
}

impl RasterExtent {
    /// Square of half-size `half` centred on the light's floor projection.
    pub fn around(light: &Vec3, half: f64) -> Self {
        Self { min: Vec2::new(light.x - half, light.z - half), max: Vec2::new(light.x + half, light.z + half) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightSample {
    pub point: Vec3,
    pub illuminance: f64,
    pub occluded: bool,
    #[serde(skip)]
    pub area: f64,
    #[serde(skip)]
    pub normal: Vec3,
}

/// Occlusion fractions, row-major; row 0 is `extent.min.y` (world z).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowRaster {
    pub width: usize,
    pub height: usize,
    pub extent: RasterExtent,
    pub cells: Vec<f64>,
}

impl ShadowRaster {
    pub fn cell_size(&self) -> Vec2 {
        let e = self.extent.max - self.extent.min;
        Vec2::new(e.x / self.width as f64, e.y / self.height as f64)
    }

    pub fn cell_center(&self, ix: usize, iz: usize) -> Vec2 {
        let c = self.cell_size();
        self.extent.min + Vec2::new((ix as f64 + 0.5) * c.x, (iz as f64 + 0.5) * c.y)
    }

    pub fn get(&self, ix: usize, iz: usize) -> f64 {
        self.cells[iz * self.width + ix]
    }

    pub fn mean(&self) -> f64 {
        if self.cells.is_empty() {
            0.0
        } else {
            self.cells.iter().sum::<f64>() / self.cells.len() as f64
        }
    }

    /// Mean over cells whose centres lie within `radius` of `center`.
    pub fn disc_mean(&self, center: Vec2, radius: f64) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for iz in 0..self.height {
            for ix in 0..self.width {
                if (self.cell_center(ix, iz) - center).norm() <= radius {
                    sum += self.get(ix, iz);
                    n += 1;
                }
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Shadowed area in square meters.
    pub fn shadow_area(&self) -> f64 {
        let c = self.cell_size();
        self.cells.iter().sum::<f64>() * c.x * c.y
    }

    /// Binary 8-bit PGM; lit cells are white, fully shadowed cells black.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.cells.iter().map(|f| (255.0 * (1.0 - f.clamp(0.0, 1.0))).round() as u8));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightingReport {
    pub samples: Vec<LightSample>,
    pub shadow_raster: ShadowRaster,
    pub shadow_coverage: f64,
    pub mean_illuminance: f64,
}

fn horizontal_distance_to_triangle(c: &Vec2, t: &[Vec3; 3]) -> f64 {
    let lo = Vec2::new(t[0].x.min(t[1].x).min(t[2].x), t[0].z.min(t[1].z).min(t[2].z));
    let hi = Vec2::new(t[0].x.max(t[1].x).max(t[2].x), t[0].z.max(t[1].z).max(t[2].z));
    let d = Vec2::new((lo.x - c.x).max(c.x - hi.x).max(0.0), (lo.y - c.y).max(c.y - hi.y).max(0.0));
    d.norm()
}

/// Centroids and areas of a uniform `n × n` split of the triangle.
fn subdivide(t: &[Vec3; 3], max_edge: f64, out: &mut Vec<(Vec3, f64, Vec3)>) {
    let [a, b, c] = *t;
    let cross = (b - a).cross(&(c - a));
    let area = cross.norm() * 0.5;
    if !(area > 0.0) {
        return;
    }
    let normal = cross / (2.0 * area);
    let longest = (b - a).norm().max((c - b).norm()).max((a - c).norm());
    let n = ((longest / max_edge).ceil() as usize).max(1);
    let sub = area / (n * n) as f64;
    let p = |i: usize, j: usize| a + (b - a) * (i as f64 / n as f64) + (c - a) * (j as f64 / n as f64);
    for i in 0..n {
        for j in 0..n - i {
            out.push(((p(i, j) + p(i + 1, j) + p(i, j + 1)) / 3.0, sub, normal));
            if i + j + 1 < n {
                out.push(((p(i + 1, j) + p(i + 1, j + 1) + p(i, j + 1)) / 3.0, sub, normal));
            }
        }
    }
}

/// Even-odd crossing count along a fixed skew ray.
fn inside(point: &Vec3, mesh: &TriangleMesh) -> bool {
    let ray = Ray::new(*point, Vec3::new(0.137, 0.981, 0.071).normalize());
    let hits = (0..mesh.triangles.len())
        .filter(|&i| ray.intersect(&mesh.triangle(i), 0.0, f64::INFINITY).is_some())
        .count();
    hits % 2 == 1
}

fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let threads = std::thread::available_parallelism().map_or(1, |p| p.get()).min(16);
    if threads <= 1 || n < 4096 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|k| {
                let f = &f;
                s.spawn(move || (k * chunk..((k + 1) * chunk).min(n)).map(f).collect::<Vec<T>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

pub fn estimate_lighting(
    design_mesh: &TriangleMesh,
    scene: &EnvironmentScene,
    light: &PointLight,
    extent: Option<RasterExtent>,
) -> Result<LightingReport, LightingError> {
    if scene.mesh.is_empty() {
        return Err(LightingError::EmptyScene);
    }
    if !design_mesh.is_empty() && inside(&light.position, design_mesh) {
        return Err(LightingError::LightInsideMesh);
    }
    let occluder = Bvh::build(&design_mesh.vertices, &design_mesh.triangles);
    let lp = light.position;
    let foot = Vec2::new(lp.x, lp.z);
    let shadowed = |p: &Vec3| -> bool {
        let to = lp - p;
        let d = to.norm();
        d > 0.0 && occluder.occluded(p, &(to / d), d)
    };

    let mut raw = Vec::new();
    for i in 0..scene.mesh.triangles.len() {
        let t = scene.mesh.triangle(i);
        let edge = if horizontal_distance_to_triangle(&foot, &t) <= FINE_RADIUS { FINE_EDGE } else { COARSE_EDGE };
        subdivide(&t, edge, &mut raw);
    }
    let samples: Vec<LightSample> = par_map(raw.len(), |k| {
        let (point, area, normal) = raw[k];
        let occluded = shadowed(&point);
        let to = lp - point;
        let d2 = to.norm_squared();
        let illuminance = if occluded || d2 == 0.0 {
            0.0
        } else {
            light.intensity * normal.dot(&(to / d2.sqrt())).max(0.0) / d2
        };
        LightSample { point, illuminance, occluded, area, normal }
    });

    let floor = scene.planes.iter().min_by(|a, b| a.height_at(lp.x, lp.z).total_cmp(&b.height_at(lp.x, lp.z)));
    let on_floor = |s: &LightSample| match floor {
        Some(pl) => pl.signed_distance(&s.point).abs() <= FLOOR_TOLERANCE && s.normal.dot(&pl.normal) >= LEVEL_COS,
        None => s.normal.dot(&UP) >= LEVEL_COS,
    };
    let (mut occ_area, mut floor_area) = (0.0, 0.0);
    for s in &samples {
        if (Vec2::new(s.point.x, s.point.z) - foot).norm() <= COVERAGE_RADIUS && on_floor(s) {
            floor_area += s.area;
            if s.occluded {
                occ_area += s.area;
            }
        }
    }
    let shadow_coverage = if floor_area > 0.0 { occ_area / floor_area } else { 0.0 };
    let total_area: f64 = samples.iter().map(|s| s.area).sum();
    let mean_illuminance =
        if total_area > 0.0 { samples.iter().map(|s| s.illuminance * s.area).sum::<f64>() / total_area } else { 0.0 };

    let extent = extent.unwrap_or_else(|| RasterExtent::around(&lp, FINE_RADIUS));
    let mut raster = ShadowRaster { width: RASTER_SIZE, height: RASTER_SIZE, extent, cells: Vec::new() };
    let cell = raster.cell_size();
    let depth = lp.y - scene.mesh.bbox().min.y + 1.0;
    raster.cells = par_map(RASTER_SIZE * RASTER_SIZE, |k| {
        let (ix, iz) = (k % RASTER_SIZE, k / RASTER_SIZE);
        let (mut hit, mut occ) = (0u32, 0u32);
        for (sx, sz) in [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)] {
            let x = extent.min.x + (ix as f64 + sx) * cell.x;
            let z = extent.min.y + (iz as f64 + sz) * cell.y;
            let origin = Vec3::new(x, lp.y, z);
            if let Some(h) = scene.accel.raycast(&origin, &-UP, depth) {
                hit += 1;
                if shadowed(&(origin - UP * h.t)) {
                    occ += 1;
                }
            }
        }
        if hit == 0 {
            0.0
        } else {
            occ as f64 / hit as f64
        }
    });

    Ok(LightingReport { samples, shadow_raster: raster, shadow_coverage, mean_illuminance })
}
