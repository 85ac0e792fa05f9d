//! Machine-checkable requirement specs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::stability::{quasi_static_stability, support_plane_for, StabilityError};
use crate::design::{Configuration, Design, GeneratorKind};
use crate::environment::{EnvironmentScene, SupportPlane};
use crate::geometry::{cavity, Cavity, GeometryError, TriangleMesh};
use crate::math::{rotate_yaw, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        self as usize
    }
}

/// A fixed length or one measured between two points in the scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Length {
    Value(f64),
    Between { between: [Vec3; 2] },
}

impl Length {
    pub fn meters(&self) -> f64 {
        match self {
            Length::Value(v) => *v,
            Length::Between { between: [a, b] } => (a - b).norm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    MaxHeight { limit: f64 },
    MaxExtent { axis: Axis, limit: Length },
    Align { param: String, target: Length, tol: f64 },
    FitsInsideCavity { radius: f64, height: f64 },
    Stable,
}

impl Clause {
    pub fn name(&self) -> String {
        match self {
            Clause::MaxHeight { .. } => "max_height".into(),
            Clause::MaxExtent { axis, .. } => format!("max_extent({})", ["x", "y", "z"][axis.index()]),
            Clause::Align { param, .. } => format!("align({param})"),
            Clause::FitsInsideCavity { .. } => "fits_inside_cavity".into(),
            Clause::Stable => "stable".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementSpec {
    pub clauses: Vec<Clause>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub clause: String,
    pub passed: bool,
    pub measured: f64,
    pub limit: f64,
    /// How far past the limit the measurement lies; positive means failure.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RequirementError {
    #[error("clause {clause} does not apply to {generator} designs")]
    UnknownClauseForDesignKind { clause: String, generator: String },
    #[error("invalid clause {clause}: {message}")]
    InvalidClause { clause: String, message: String },
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

impl RequirementSpec {
    pub fn validate(&self) -> Result<(), RequirementError> {
        for c in &self.clauses {
            let bad = |m: &str| Err(RequirementError::InvalidClause { clause: c.name(), message: m.into() });
            let positive = |v: f64| v.is_finite() && v > 0.0;
            match c {
                Clause::MaxHeight { limit } if !positive(*limit) => return bad("limit must be positive"),
                Clause::MaxExtent { limit, .. } if !positive(limit.meters()) => return bad("limit must be positive"),
                Clause::Align { tol, target, .. } if !(tol.is_finite() && *tol >= 0.0 && target.meters().is_finite()) => {
                    return bad("tol must be non-negative")
                }
                Clause::FitsInsideCavity { radius, height } if !(positive(*radius) && positive(*height)) => {
                    return bad("cylinder must have positive size")
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn upper(clause: &Clause, measured: f64, limit: f64) -> ClauseResult {
    ClauseResult { clause: clause.name(), passed: measured <= limit, measured, limit, excess: measured - limit }
}

/// Evaluates each clause. `scene` supplies the support plane for `stable`;
/// without one the design is assumed to stand on a level floor.
pub fn check_requirements(
    design: &Design,
    config: &Configuration,
    mesh: &TriangleMesh,
    scene: Option<&EnvironmentScene>,
    spec: &RequirementSpec,
) -> Result<Vec<ClauseResult>, RequirementError> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.clauses.len());
    for clause in &spec.clauses {
        out.push(match clause {
            Clause::MaxHeight { limit } => upper(clause, mesh.bbox().extent().y, *limit),
            Clause::MaxExtent { axis, limit } => {
                // Measured in the design's own frame so yaw does not matter.
                let p = config.pose;
                let local = mesh.map_vertices(|v| rotate_yaw(&(v - p.position), -p.yaw));
                upper(clause, local.bbox().extent()[axis.index()], limit.meters())
            }
            Clause::Align { param, target, tol } => {
                let v = config.number(param).ok_or_else(|| RequirementError::UnknownParameter(param.clone()))?;
                let dev = (v - target.meters()).abs();
                ClauseResult { clause: clause.name(), passed: dev <= *tol, measured: v, limit: target.meters(), excess: dev - tol }
            }
            Clause::FitsInsideCavity { radius, height } => fits(design, config, clause, *radius, *height)?,
            Clause::Stable => {
                let margin = match scene {
                    Some(s) => quasi_static_stability(mesh, support_plane_for(mesh, s)?)?,
                    None => quasi_static_stability(mesh, &SupportPlane::horizontal(mesh.bbox().min.y))?,
                };
                ClauseResult { clause: clause.name(), passed: margin > 0.0, measured: margin, limit: 0.0, excess: -margin }
            }
        });
    }
    Ok(out)
}

fn fits(
    design: &Design,
    config: &Configuration,
    clause: &Clause,
    r: f64,
    h: f64,
) -> Result<ClauseResult, RequirementError> {
    let unknown = || RequirementError::UnknownClauseForDesignKind {
        clause: clause.name(),
        generator: design.generator.generator.name().to_string(),
    };
    let (min_radius, inner_height) = match cavity(design, config)? {
        Some(Cavity::Lathe(rings)) => {
            let inner_height = rings.height - rings.cavity_floor;
            let top = (rings.cavity_floor + h).min(rings.height);
            (rings.min_inner_radius(rings.cavity_floor, top).unwrap_or(0.0), inner_height)
        }
        Some(Cavity::Box(b)) => {
            let e = b.extent();
            (0.5 * e.x.min(e.z), e.y)
        }
        None if design.generator.generator == GeneratorKind::Lathe => (0.0, 0.0),
        None => return Err(unknown()),
    };
    let excess = (r - min_radius).max(h - inner_height);
    Ok(ClauseResult { clause: clause.name(), passed: excess <= 0.0, measured: min_radius, limit: r, excess })
}
