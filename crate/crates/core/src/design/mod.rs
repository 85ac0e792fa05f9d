//! Parametric designs, configurations and constrained editing.

mod edit;
mod types;

pub use edit::{
    apply_handle_drag, assign_all, bind_measurement, handle_frame, measure_distance, set_parameter, set_pose,
    validate, ClampedDependent, EditMode, EditOutcome, SnapBack, ValidityReport, Violation,
};
pub use types::{
    nearest_level, Bound, Configuration, Constraint, CurvePlane, Design, ErgonomicBinding, GeneratorBinding,
    GeneratorKind, HandleDef, LinearExpr, ParamKind, ParamValue, ParameterDef, Pose, SlotValue, Unit, Vec3Expr,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DesignError {
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("parameter `{parameter}` expects a {expected} value")]
    KindMismatch { parameter: String, expected: &'static str },
    #[error("configuration refers to unknown design `{0}`")]
    UnknownDesign(String),
    #[error("parameter `{0}` has no handle")]
    NoHandle(String),
    #[error("handle axis of `{0}` has zero length")]
    DegenerateAxis(String),
    #[error("parameter `{0}` is not a length")]
    NonLengthParameter(String),
}
