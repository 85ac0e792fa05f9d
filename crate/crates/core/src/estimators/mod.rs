//! In-context validation: stability, lighting and requirement checks.

pub mod lighting;
pub mod requirements;
pub mod stability;

pub use lighting::{estimate_lighting, LightSample, LightingError, LightingReport, PointLight, RasterExtent, ShadowRaster};
pub use requirements::{check_requirements, Axis, Clause, ClauseResult, Length, RequirementError, RequirementSpec};
pub use stability::{
    estimate_stability, estimate_stability_in, quasi_static, quasi_static_stability, support_plane_for, QuasiStatic,
    RigidTransform, StabilityError, StabilityReport, TraceSample,
};
