//! RANSAC detection of horizontal support planes.

use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::TriangleMesh;
use crate::math::{convex_hull_2d, Vec2, Vec3, UP};

/// Horizontal surface `normal · p = offset`. `bounds` is the convex hull of
/// the inliers in world (x, z), counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPlane {
    pub normal: Vec3,
    pub offset: f64,
    pub inlier_count: usize,
    pub bounds: Vec<Vec2>,
}

impl SupportPlane {
    /// Height of the plane above `(x, z)`.
    pub fn height_at(&self, x: f64, z: f64) -> f64 {
        (self.offset - self.normal.x * x - self.normal.z * z) / self.normal.y
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// A level plane at height `y` with unbounded extent.
    pub fn horizontal(y: f64) -> Self {
        Self { normal: UP, offset: y, inlier_count: 0, bounds: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneDetection {
    pub samples: usize,
    pub iterations: usize,
    pub inlier_distance: f64,
    pub max_tilt_deg: f64,
    pub min_inliers: usize,
    pub min_fraction: f64,
    pub max_planes: usize,
}

impl Default for PlaneDetection {
    fn default() -> Self {
        Self {
            samples: 20_000,
            iterations: 200,
            inlier_distance: 0.005,
            max_tilt_deg: 10.0,
            min_inliers: 500,
            min_fraction: 0.02,
            max_planes: 8,
        }
    }
}

impl PlaneDetection {
    pub fn threshold(&self) -> usize {
        self.min_inliers.max((self.min_fraction * self.samples as f64).ceil() as usize)
    }
}

/// Area-weighted uniform points on the mesh surface.
pub fn sample_surface(mesh: &TriangleMesh, count: usize, rng: &mut impl Rng) -> Vec<Vec3> {
    sample_with_normals(mesh, count, rng).into_iter().map(|(p, _)| p).collect()
}

/// Surface samples paired with the unit normal of their source triangle.
fn sample_with_normals(mesh: &TriangleMesh, count: usize, rng: &mut impl Rng) -> Vec<(Vec3, Vec3)> {
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for i in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle(i);
        total += (b - a).cross(&(c - a)).norm() * 0.5;
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let r = rng.gen::<f64>() * total;
            let i = cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1);
            let [a, b, c] = mesh.triangle(i);
            let (mut u, mut v) = (rng.gen::<f64>(), rng.gen::<f64>());
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            let n = (b - a).cross(&(c - a));
            (a + (b - a) * u + (c - a) * v, n / n.norm())
        })
        .collect()
}

fn plane_through(p: &[Vec3; 3]) -> Option<(Vec3, f64)> {
    let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
    let len = n.norm();
    if !(len > 1e-12) {
        return None;
    }
    let mut n = n / len;
    if n.y < 0.0 {
        n = -n;
    }
    Some((n, n.dot(&p[0])))
}

fn inliers(points: &[Vec3], level: &[bool], n: &Vec3, d: f64, eps: f64) -> Vec<usize> {
    (0..points.len()).filter(|&i| level[i] && (n.dot(&points[i]) - d).abs() <= eps).collect()
}

/// Total least squares plane through the given points.
fn refit(points: &[Vec3], idx: &[usize]) -> Option<(Vec3, f64)> {
    let c = idx.iter().map(|&i| points[i]).sum::<Vec3>() / idx.len() as f64;
    let mut cov = Matrix3::zeros();
    for &i in idx {
        let d = points[i] - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imin();
    let mut n: Vec3 = eig.eigenvectors.column(k).into_owned();
    if !n.iter().all(|x| x.is_finite()) || n.norm() == 0.0 {
        return None;
    }
    n = n.normalize();
    if n.y < 0.0 {
        n = -n;
    }
    Some((n, n.dot(&c)))
}

pub fn detect_planes(mesh: &TriangleMesh, seed: u64) -> Vec<SupportPlane> {
    detect_planes_with(mesh, seed, &PlaneDetection::default())
}

pub fn detect_planes_with(mesh: &TriangleMesh, seed: u64, cfg: &PlaneDetection) -> Vec<SupportPlane> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = sample_with_normals(mesh, cfg.samples, &mut rng);
    let threshold = cfg.threshold();
    let min_cos = cfg.max_tilt_deg.to_radians().cos();
    let mut points: Vec<Vec3> = samples.iter().map(|s| s.0).collect();
    // Only samples on upward-facing level triangles take part. Scans wound
    // the other way are detected by majority.
    let up_votes: i64 = samples
        .iter()
        .map(|s| if s.1.y >= min_cos { 1 } else if -s.1.y >= min_cos { -1 } else { 0 })
        .sum();
    let facing = if up_votes < 0 { -1.0 } else { 1.0 };
    let mut level: Vec<bool> = samples.iter().map(|s| facing * s.1.y >= min_cos).collect();
    let mut planes = Vec::new();
    while planes.len() < cfg.max_planes && points.len() >= threshold.max(3) {
        let pool: Vec<usize> = (0..points.len()).filter(|&i| level[i]).collect();
        if pool.len() < 3 {
            break;
        }
        let mut best: Option<(Vec3, f64, usize)> = None;
        for _ in 0..cfg.iterations {
            let pick = [0; 3].map(|_| points[pool[rng.gen_range(0..pool.len())]]);
            let Some((n, d)) = plane_through(&pick) else { continue };
            if n.y < min_cos {
                continue;
            }
            let count = pool.iter().filter(|&&i| (n.dot(&points[i]) - d).abs() <= cfg.inlier_distance).count();
            if best.map_or(true, |b| count > b.2) {
                best = Some((n, d, count));
            }
        }
        let Some((n, d, count)) = best else { break };
        if count < threshold {
            break;
        }
        let mut plane = (n, d);
        let mut idx = inliers(&points, &level, &n, d, cfg.inlier_distance);
        // Two refinement rounds; each must stay level and keep enough support.
        for _ in 0..2 {
            let Some((rn, rd)) = refit(&points, &idx) else { break };
            if rn.y < min_cos {
                break;
            }
            let next = inliers(&points, &level, &rn, rd, cfg.inlier_distance);
            if next.len() < threshold {
                break;
            }
            plane = (rn, rd);
            idx = next;
        }
        let hull = convex_hull_2d(&idx.iter().map(|&i| Vec2::new(points[i].x, points[i].z)).collect::<Vec<_>>());
        planes.push(SupportPlane { normal: plane.0, offset: plane.1, inlier_count: idx.len(), bounds: hull });
        let mut keep = vec![true; points.len()];
        for &i in &idx {
            keep[i] = false;
        }
        let mut k = 0;
        points.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        k = 0;
        level.retain(|_| {
            k += 1;
            keep[k - 1]
        });
    }
    planes
}
