//! Preview/commit editing with snap-back.
//!
//! A commit either yields a configuration that satisfies every kind bound and
//! constraint, or returns the prior configuration untouched together with the
//! first violation found. Committing a parameter that other constraints read
//! clamps those dependents into their re-evaluated bounds.

use serde::{Deserialize, Serialize};

use super::types::{nearest_level, Configuration, Design, ParamKind, ParamValue, Pose, Unit};
use super::DesignError;
use crate::math::{rotate_yaw, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditMode {
    Preview,
    Commit,
}

/// One broken rule. `constraint` holds the constraint text when the rule is a
/// declared constraint rather than the parameter's own kind bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub parameter: String,
    pub constraint: Option<String>,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.constraint {
            Some(c) => write!(f, "{}: violates constraint `{c}` ({})", self.parameter, self.message),
            None => write!(f, "{}: {}", self.parameter, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A dependent parameter moved by the clamp-dependents rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClampedDependent {
    pub parameter: String,
    pub from: f64,
    pub to: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapBack {
    /// The unchanged prior configuration.
    pub config: Configuration,
    pub violation: Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum EditOutcome {
    /// Transient state carrying the raw value; never persisted.
    Preview { config: Configuration, invalid: bool, violations: Vec<Violation> },
    Committed { config: Configuration, clamped: Vec<ClampedDependent> },
    SnappedBack(SnapBack),
}

impl EditOutcome {
    /// The configuration a caller should display after this edit.
    pub fn config(&self) -> &Configuration {
        match self {
            EditOutcome::Preview { config, .. } | EditOutcome::Committed { config, .. } => config,
            EditOutcome::SnappedBack(s) => &s.config,
        }
    }

    pub fn is_snapped_back(&self) -> bool {
        matches!(self, EditOutcome::SnappedBack(_))
    }

    /// The configuration to keep as the committed state: the new one after a
    /// commit, the prior one after a snap-back, `None` for previews.
    pub fn committed(&self) -> Option<&Configuration> {
        match self {
            EditOutcome::Committed { config, .. } => Some(config),
            EditOutcome::SnappedBack(s) => Some(&s.config),
            EditOutcome::Preview { .. } => None,
        }
    }
}

fn check_design(design: &Design, config: &Configuration) -> Result<(), DesignError> {
    if config.design_id != design.id {
        return Err(DesignError::UnknownDesign(config.design_id.clone()));
    }
    Ok(())
}

fn violations_of(design: &Design, config: &Configuration) -> Vec<Violation> {
    let mut out = Vec::new();
    for p in &design.parameters {
        match config.values.get(&p.name) {
            None => out.push(Violation { parameter: p.name.clone(), constraint: None, message: "missing value".into() }),
            Some(v) => {
                if let Err(message) = p.kind.check_bounds(v) {
                    out.push(Violation { parameter: p.name.clone(), constraint: None, message });
                }
            }
        }
    }
    for c in &design.constraints {
        let Some(value) = config.number(&c.target) else {
            continue;
        };
        match c.interval(config) {
            Some((lo, hi)) if value >= lo && value <= hi => {}
            Some((lo, hi)) => out.push(Violation {
                parameter: c.target.clone(),
                constraint: Some(c.to_string()),
                message: format!("{value} outside [{lo}, {hi}]"),
            }),
            None => out.push(Violation {
                parameter: c.target.clone(),
                constraint: Some(c.to_string()),
                message: "referenced parameter has no numeric value".into(),
            }),
        }
    }
    out
}

/// Reports every kind-bound and constraint violation at the current values.
pub fn validate(design: &Design, config: &Configuration) -> Result<ValidityReport, DesignError> {
    check_design(design, config)?;
    Ok(ValidityReport { violations: violations_of(design, config) })
}

/// Feasible numeric interval for `name` given every constraint on it,
/// evaluated at `config`.
fn feasible_interval(design: &Design, config: &Configuration, name: &str) -> Option<(f64, f64)> {
    let kind = &design.param(name)?.kind;
    let (mut lo, mut hi) = kind.numeric_range()?;
    for c in design.constraints_on(name) {
        let (a, b) = c.interval(config)?;
        lo = lo.max(a);
        hi = hi.min(b);
    }
    Some((lo, hi))
}

fn clamp_into(kind: &ParamKind, value: f64, lo: f64, hi: f64) -> Option<f64> {
    if !(lo <= hi) {
        return None;
    }
    match kind {
        ParamKind::Discrete { levels, .. } => nearest_level(levels.iter().copied().filter(|l| *l >= lo && *l <= hi), value),
        _ => Some(value.clamp(lo, hi)),
    }
}

fn propagate(design: &Design, config: &mut Configuration, edited: &str) -> Result<Vec<ClampedDependent>, Violation> {
    let mut clamped: Vec<ClampedDependent> = Vec::new();
    let mut work = vec![edited.to_string()];
    let budget = (design.parameters.len() + 1) * (design.constraints.len() + 1);
    let mut steps = 0;
    while let Some(p) = work.pop() {
        steps += 1;
        if steps > budget {
            return Err(Violation {
                parameter: edited.to_string(),
                constraint: None,
                message: "constraint propagation did not converge".into(),
            });
        }
        let targets: Vec<String> = design.dependents_of(&p).map(|c| c.target.clone()).collect();
        for q in targets {
            if q == edited {
                continue;
            }
            let Some(current) = config.number(&q) else { continue };
            let Some(qdef) = design.param(&q) else { continue };
            let (lo, hi) = feasible_interval(design, config, &q).unwrap_or((f64::NAN, f64::NAN));
            if current >= lo && current <= hi {
                continue;
            }
            let Some(to) = clamp_into(&qdef.kind, current, lo, hi) else {
                let c = design.constraints_on(&q).find(|c| c.references().contains(&p.as_str()));
                return Err(Violation {
                    parameter: q.clone(),
                    constraint: c.map(|c| c.to_string()),
                    message: format!("no feasible value for dependent {q} within [{lo}, {hi}]"),
                });
            };
            config.values.insert(q.clone(), ParamValue::Number(to));
            match clamped.iter_mut().find(|c| c.parameter == q) {
                Some(entry) => entry.to = to,
                None => clamped.push(ClampedDependent { parameter: q.clone(), from: current, to }),
            }
            work.push(q);
        }
    }
    Ok(clamped)
}

/// Sets one parameter. See the module docs for commit semantics.
pub fn set_parameter(
    design: &Design,
    config: &Configuration,
    name: &str,
    value: ParamValue,
    mode: EditMode,
) -> Result<EditOutcome, DesignError> {
    check_design(design, config)?;
    let def = design.param(name).ok_or_else(|| DesignError::UnknownParameter(name.to_string()))?;
    if !def.kind.accepts(&value) {
        return Err(DesignError::KindMismatch { parameter: name.to_string(), expected: def.kind.name() });
    }

    let mut next = config.clone();
    if mode == EditMode::Preview {
        next.values.insert(name.to_string(), value);
        let violations = violations_of(design, &next);
        return Ok(EditOutcome::Preview { config: next, invalid: !violations.is_empty(), violations });
    }

    let value = match value {
        ParamValue::Number(v) => ParamValue::Number(def.kind.snap(v)),
        other => other,
    };
    let snap_back = |violation: Violation| Ok(EditOutcome::SnappedBack(SnapBack { config: config.clone(), violation }));

    if let Err(message) = def.kind.check_bounds(&value) {
        return snap_back(Violation { parameter: name.to_string(), constraint: None, message });
    }
    next.values.insert(name.to_string(), value);
    if let Some(v) = next.number(name) {
        for c in design.constraints_on(name) {
            match c.interval(&next) {
                Some((lo, hi)) if v >= lo && v <= hi => {}
                other => {
                    let message = match other {
                        Some((lo, hi)) => format!("{v} outside [{lo}, {hi}]"),
                        None => "referenced parameter has no numeric value".into(),
                    };
                    return snap_back(Violation { parameter: name.to_string(), constraint: Some(c.to_string()), message });
                }
            }
        }
    }
    let clamped = match propagate(design, &mut next, name) {
        Ok(c) => c,
        Err(v) => return snap_back(v),
    };
    if let Some(v) = violations_of(design, &next).into_iter().next() {
        return snap_back(v);
    }
    Ok(EditOutcome::Committed { config: next, clamped })
}

/// World-frame anchor and unit axis of a parameter's handle.
pub fn handle_frame(design: &Design, config: &Configuration, name: &str) -> Result<(Vec3, Vec3), DesignError> {
    let def = design.param(name).ok_or_else(|| DesignError::UnknownParameter(name.to_string()))?;
    let handle = def.handle.as_ref().ok_or_else(|| DesignError::NoHandle(name.to_string()))?;
    let anchor = handle.anchor.eval(config).ok_or_else(|| DesignError::NoHandle(name.to_string()))?;
    let axis = handle.axis.eval(config).ok_or_else(|| DesignError::NoHandle(name.to_string()))?;
    let len = axis.norm();
    if !(len > 0.0) || !len.is_finite() {
        return Err(DesignError::DegenerateAxis(name.to_string()));
    }
    let yaw = config.pose.yaw;
    Ok((rotate_yaw(&anchor, yaw) + config.pose.position, rotate_yaw(&(axis / len), yaw)))
}

/// Maps a world-space drag point onto the handle axis and routes the
/// resulting value through [`set_parameter`].
pub fn apply_handle_drag(
    design: &Design,
    config: &Configuration,
    name: &str,
    drag_point: Vec3,
    mode: EditMode,
) -> Result<EditOutcome, DesignError> {
    check_design(design, config)?;
    let def = design.param(name).ok_or_else(|| DesignError::UnknownParameter(name.to_string()))?;
    let handle = def.handle.as_ref().ok_or_else(|| DesignError::NoHandle(name.to_string()))?;
    let current = config
        .number(name)
        .ok_or(DesignError::KindMismatch { parameter: name.to_string(), expected: def.kind.name() })?;
    let (anchor, axis) = handle_frame(design, config, name)?;
    let candidate = current + (drag_point - anchor).dot(&axis) * handle.scale;
    set_parameter(design, config, name, ParamValue::Number(candidate), mode)
}

pub fn measure_distance(p: &Vec3, q: &Vec3) -> f64 {
    (p - q).norm()
}

/// Commits a measured length (meters) to a length parameter.
pub fn bind_measurement(
    design: &Design,
    config: &Configuration,
    name: &str,
    length: f64,
) -> Result<EditOutcome, DesignError> {
    check_design(design, config)?;
    let def = design.param(name).ok_or_else(|| DesignError::UnknownParameter(name.to_string()))?;
    if def.kind.unit() != Some(Unit::Length) {
        return Err(DesignError::NonLengthParameter(name.to_string()));
    }
    set_parameter(design, config, name, ParamValue::Number(length), EditMode::Commit)
}

/// Replaces the pose; yaw is normalized into `[0, 2π)`.
pub fn set_pose(config: &Configuration, position: Vec3, yaw: f64) -> Configuration {
    Configuration { pose: Pose::new(position, yaw), ..config.clone() }
}

/// Applies several raw assignments at once (discrete values snapped) and
/// validates the result as a whole. Used by batch front-ends where the
/// assignment order should not matter.
pub fn assign_all(
    design: &Design,
    base: &Configuration,
    assignments: &[(String, ParamValue)],
) -> Result<Result<Configuration, Vec<Violation>>, DesignError> {
    check_design(design, base)?;
    let mut next = base.clone();
    for (name, value) in assignments {
        let def = design.param(name).ok_or_else(|| DesignError::UnknownParameter(name.clone()))?;
        if !def.kind.accepts(value) {
            return Err(DesignError::KindMismatch { parameter: name.clone(), expected: def.kind.name() });
        }
        let value = match value {
            ParamValue::Number(v) => ParamValue::Number(def.kind.snap(*v)),
            other => other.clone(),
        };
        next.values.insert(name.clone(), value);
    }
    let violations = violations_of(design, &next);
    Ok(if violations.is_empty() { Ok(next) } else { Err(violations) })
}
