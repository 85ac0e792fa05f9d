//! Curves, mesh generation, mesh diagnostics and STL export.

mod bezier;
mod generate;
pub mod lathe;
pub mod mesh;
pub mod panel;
mod stl;

pub use bezier::{eval_bezier, BezierPath, CubicBezier};
pub use generate::{
    cavity, generate_local_mesh, generate_mesh, lathe_spec, slot_specs, Cavity, SlotSpec, SlotType, DEFAULT_SEGMENTS,
};
pub use mesh::{diagnose, mass_properties, Aabb, MassProperties, MeshDiagnostics, MeshPart, TriangleMesh};
pub use stl::{export_stl, import_stl};

/// Minimum radius of a lathe profile, in meters.
pub const R_MIN: f64 = 0.002;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("curve parameter {0} outside [0, 1]")]
    OutOfRangeT(f64),
    #[error("path has no segments")]
    EmptyPath,
    #[error("non-finite control point")]
    NonFinite,
    #[error("segment {0} does not end where the next segment starts")]
    Discontinuous(usize),
    #[error("{0} control points cannot form cubic segments (need 3k+1)")]
    BadControlPointCount(usize),
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("malformed STL: {0}")]
    MalformedStl(String),
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfiguration(Vec<String>),
    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),
    #[error("generator slot `{0}` is not bound to a usable value")]
    MissingSlot(String),
}
