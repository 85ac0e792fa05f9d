//! Environment scans: import, support planes and ray queries.

mod bvh;
mod import;
mod planes;

use serde::Serialize;
use thiserror::Error;

pub use bvh::{Bvh, Hit, Ray, T_MIN};
pub use import::{parse_obj, parse_ply, write_obj, AxisRemap, ScanFormat};
pub use planes::{detect_planes, detect_planes_with, sample_surface, PlaneDetection, SupportPlane};

use crate::geometry::TriangleMesh;
use crate::math::Vec3;

pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvironmentError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("scan contains no triangles")]
    EmptyScan,
    #[error("face at line {line} has {vertices} vertices")]
    NonTriangulated { line: usize, vertices: usize },
}

/// An imported scan. Immutable once built.
#[derive(Debug, Clone)]
pub struct EnvironmentScene {
    pub mesh: TriangleMesh,
    pub planes: Vec<SupportPlane>,
    pub accel: Bvh,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SceneSummary {
    pub triangles: usize,
    pub seed: u64,
    pub planes: Vec<SupportPlane>,
}

impl EnvironmentScene {
    pub fn from_mesh(mesh: TriangleMesh, seed: u64) -> Result<Self, EnvironmentError> {
        if mesh.is_empty() {
            return Err(EnvironmentError::EmptyScan);
        }
        let planes = detect_planes(&mesh, seed);
        let accel = Bvh::build(&mesh.vertices, &mesh.triangles);
        Ok(Self { mesh, planes, accel, seed })
    }

    pub fn raycast(&self, origin: &Vec3, dir: &Vec3, max_t: f64) -> Option<Hit> {
        self.accel.raycast(origin, dir, max_t)
    }

    /// Highest plane whose bounds contain `(x, z)` and that lies at or below
    /// `y`, or the lowest plane when none does.
    pub fn support_plane_below(&self, x: f64, z: f64, y: f64) -> Option<&SupportPlane> {
        let p = crate::math::Vec2::new(x, z);
        self.planes
            .iter()
            .filter(|pl| {
                pl.bounds.len() >= 3
                    && crate::math::signed_distance_to_convex_polygon(&p, &pl.bounds) >= 0.0
                    && pl.height_at(x, z) <= y + 1e-6
            })
            .max_by(|a, b| a.height_at(x, z).total_cmp(&b.height_at(x, z)))
            .or_else(|| self.planes.iter().min_by(|a, b| a.height_at(x, z).total_cmp(&b.height_at(x, z))))
    }

    pub fn summary(&self) -> SceneSummary {
        SceneSummary { triangles: self.mesh.triangles.len(), seed: self.seed, planes: self.planes.clone() }
    }
}

pub fn load_scene(bytes: &[u8], format: ScanFormat) -> Result<EnvironmentScene, EnvironmentError> {
    load_scene_with(bytes, format, AxisRemap::YUp, DEFAULT_SEED)
}

pub fn load_scene_with(
    bytes: &[u8],
    format: ScanFormat,
    remap: AxisRemap,
    seed: u64,
) -> Result<EnvironmentScene, EnvironmentError> {
    let mesh = match format {
        ScanFormat::Obj => parse_obj(bytes, remap)?,
        ScanFormat::Ply => parse_ply(bytes, remap)?,
    };
    EnvironmentScene::from_mesh(mesh, seed)
}
