use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ergonomics::ErgonomicTag;
use crate::geometry::{BezierPath, R_MIN};
use crate::math::{normalize_angle, Vec3};

/// Physical dimension of a numeric parameter. Lengths are stored in meters,
/// angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Length,
    Angle,
    Unitless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvePlane {
    LatheProfile,
    Silhouette,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ParamKind {
    Continuous { min: f64, max: f64, unit: Unit },
    Discrete { levels: Vec<f64>, unit: Unit },
    Option { labels: Vec<String> },
    Boolean,
    Text { max_len: usize },
    Curve { segment_budget: usize, plane: CurvePlane },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Bool(bool),
    Text(String),
    Curve(BezierPath),
}

impl ParamValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            ParamValue::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            ParamValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_curve(&self) -> Option<&BezierPath> {
        match self {
            ParamValue::Curve(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(v) => write!(f, "{v}"),
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Text(s) => write!(f, "{s:?}"),
            ParamValue::Curve(c) => write!(f, "<curve, {} segment(s)>", c.len()),
        }
    }
}

impl ParamKind {
    pub fn name(&self) -> &'static str {
        match self {
            ParamKind::Continuous { .. } => "continuous",
            ParamKind::Discrete { .. } => "discrete",
            ParamKind::Option { .. } => "option",
            ParamKind::Boolean => "boolean",
            ParamKind::Text { .. } => "text",
            ParamKind::Curve { .. } => "curve",
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ParamKind::Continuous { .. } | ParamKind::Discrete { .. })
    }

    pub fn unit(&self) -> Option<Unit> {
        match self {
            ParamKind::Continuous { unit, .. } | ParamKind::Discrete { unit, .. } => Some(*unit),
            _ => None,
        }
    }

    /// Whether `value` has the representation this kind expects.
    pub fn accepts(&self, value: &ParamValue) -> bool {
        matches!(
            (self, value),
            (ParamKind::Continuous { .. } | ParamKind::Discrete { .. }, ParamValue::Number(_))
                | (ParamKind::Option { .. } | ParamKind::Text { .. }, ParamValue::Text(_))
                | (ParamKind::Boolean, ParamValue::Bool(_))
                | (ParamKind::Curve { .. }, ParamValue::Curve(_))
        )
    }

    /// Numeric range implied by the kind alone.
    pub fn numeric_range(&self) -> Option<(f64, f64)> {
        match self {
            ParamKind::Continuous { min, max, .. } => Some((*min, *max)),
            ParamKind::Discrete { levels, .. } => Some((levels[0], levels[levels.len() - 1])),
            _ => None,
        }
    }

    /// Checks a value of the right representation against the kind's own
    /// bounds; returns a human-readable reason on failure.
    pub fn check_bounds(&self, value: &ParamValue) -> Result<(), String> {
        match (self, value) {
            (ParamKind::Continuous { min, max, .. }, ParamValue::Number(v)) => {
                if v.is_finite() && *v >= *min && *v <= *max {
                    Ok(())
                } else {
                    Err(format!("{v} outside [{min}, {max}]"))
                }
            }
            (ParamKind::Discrete { levels, .. }, ParamValue::Number(v)) => {
                if levels.contains(v) {
                    Ok(())
                } else {
                    Err(format!("{v} is not one of the levels {levels:?}"))
                }
            }
            (ParamKind::Option { labels }, ParamValue::Text(s)) => {
                if labels.contains(s) {
                    Ok(())
                } else {
                    Err(format!("{s:?} is not one of {labels:?}"))
                }
            }
            (ParamKind::Boolean, ParamValue::Bool(_)) => Ok(()),
            (ParamKind::Text { max_len }, ParamValue::Text(s)) => {
                let n = s.chars().count();
                if n <= *max_len {
                    Ok(())
                } else {
                    Err(format!("text length {n} exceeds {max_len}"))
                }
            }
            (ParamKind::Curve { segment_budget, plane }, ParamValue::Curve(path)) => {
                if path.len() > *segment_budget {
                    return Err(format!("{} segments exceed budget {segment_budget}", path.len()));
                }
                let (lo, hi) = path.control_bounds();
                if hi.y - lo.y <= 0.0 {
                    return Err("curve has no vertical extent".into());
                }
                if *plane == CurvePlane::LatheProfile && lo.x < R_MIN {
                    return Err(format!("profile radius {} below minimum {R_MIN}", lo.x));
                }
                Ok(())
            }
            _ => Err(format!("expected a {} value", self.name())),
        }
    }

    /// Nearest discrete level, lower level on exact ties.
    pub fn snap(&self, value: f64) -> f64 {
        match self {
            ParamKind::Discrete { levels, .. } => nearest_level(levels.iter().copied(), value).unwrap_or(value),
            _ => value,
        }
    }
}

/// Nearest of `levels` (ascending) to `value`, lower on ties.
pub fn nearest_level(levels: impl Iterator<Item = f64>, value: f64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for l in levels {
        let d = (l - value).abs();
        match best {
            Some((_, bd)) if d >= bd => {}
            _ => best = Some((l, d)),
        }
    }
    best.map(|(l, _)| l)
}

/// `coeff * param + offset`, or a constant when `param` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearExpr {
    pub coeff: f64,
    pub param: Option<String>,
    pub offset: f64,
}

impl LinearExpr {
    pub fn constant(v: f64) -> Self {
        Self { coeff: 0.0, param: None, offset: v }
    }

    pub fn of(param: impl Into<String>, coeff: f64, offset: f64) -> Self {
        Self { coeff, param: Some(param.into()), offset }
    }

    pub fn eval(&self, lookup: impl Fn(&str) -> Option<f64>) -> Option<f64> {
        match &self.param {
            None => Some(self.offset),
            Some(p) => lookup(p).map(|v| self.coeff * v + self.offset),
        }
    }

    pub fn eval_config(&self, config: &Configuration) -> Option<f64> {
        self.eval(|n| config.number(n))
    }
}

impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.param {
            None => write!(f, "{}", self.offset),
            Some(p) => {
                if self.coeff == 1.0 {
                    write!(f, "{p}")?;
                } else {
                    write!(f, "{}*{p}", self.coeff)?;
                }
                if self.offset != 0.0 || self.offset.is_sign_negative() {
                    if self.offset.is_sign_negative() {
                        write!(f, " - {}", -self.offset)?;
                    } else {
                        write!(f, " + {}", self.offset)?;
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Bound {
    Absolute { lo: f64, hi: f64 },
    Relative { lo: LinearExpr, hi: LinearExpr },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub target: String,
    pub bound: Bound,
}

impl Constraint {
    pub fn lo_expr(&self) -> LinearExpr {
        match &self.bound {
            Bound::Absolute { lo, .. } => LinearExpr::constant(*lo),
            Bound::Relative { lo, .. } => lo.clone(),
        }
    }

    pub fn hi_expr(&self) -> LinearExpr {
        match &self.bound {
            Bound::Absolute { hi, .. } => LinearExpr::constant(*hi),
            Bound::Relative { hi, .. } => hi.clone(),
        }
    }

    /// Parameters the bound reads.
    pub fn references(&self) -> Vec<&str> {
        match &self.bound {
            Bound::Absolute { .. } => vec![],
            Bound::Relative { lo, hi } => {
                let mut v: Vec<&str> = lo.param.iter().chain(hi.param.iter()).map(String::as_str).collect();
                v.dedup();
                v
            }
        }
    }

    pub fn is_relative(&self) -> bool {
        matches!(self.bound, Bound::Relative { .. })
    }

    /// Evaluated `[lo, hi]` at `config`; `None` when a referenced value is missing.
    pub fn interval(&self, config: &Configuration) -> Option<(f64, f64)> {
        Some((self.lo_expr().eval_config(config)?, self.hi_expr().eval_config(config)?))
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in [{}, {}]", self.target, self.lo_expr(), self.hi_expr())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vec3Expr(pub [LinearExpr; 3]);

impl Vec3Expr {
    pub fn constant(v: Vec3) -> Self {
        Self([LinearExpr::constant(v.x), LinearExpr::constant(v.y), LinearExpr::constant(v.z)])
    }

    pub fn eval(&self, config: &Configuration) -> Option<Vec3> {
        Some(Vec3::new(self.0[0].eval_config(config)?, self.0[1].eval_config(config)?, self.0[2].eval_config(config)?))
    }

    pub fn references(&self) -> impl Iterator<Item = &str> {
        self.0.iter().filter_map(|e| e.param.as_deref())
    }
}

/// Draggable handle: anchor and axis in the design-local frame, `scale` in
/// parameter units per meter of drag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandleDef {
    pub anchor: Vec3Expr,
    pub axis: Vec3Expr,
    pub scale: f64,
}

/// Ties a parameter to an anthropometric rule. With `offset_param`, the
/// recommended range is shifted by that parameter's current value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgonomicBinding {
    pub tag: ErgonomicTag,
    pub offset_param: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDef {
    pub name: String,
    pub kind: ParamKind,
    pub default: ParamValue,
    pub group: String,
    pub ergonomic: Option<ErgonomicBinding>,
    pub handle: Option<HandleDef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Lathe,
    PanelBench,
    PanelTable,
    PanelShelf,
    PanelBookholder,
}

impl GeneratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Lathe => "lathe",
            GeneratorKind::PanelBench => "panel_bench",
            GeneratorKind::PanelTable => "panel_table",
            GeneratorKind::PanelShelf => "panel_shelf",
            GeneratorKind::PanelBookholder => "panel_bookholder",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "lathe" => GeneratorKind::Lathe,
            "panel_bench" => GeneratorKind::PanelBench,
            "panel_table" => GeneratorKind::PanelTable,
            "panel_shelf" => GeneratorKind::PanelShelf,
            "panel_bookholder" => GeneratorKind::PanelBookholder,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlotValue {
    Param(String),
    Number(f64),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorBinding {
    pub generator: GeneratorKind,
    pub bindings: BTreeMap<String, SlotValue>,
}

impl GeneratorBinding {
    pub fn number(&self, slot: &str, config: &Configuration) -> Option<f64> {
        match self.bindings.get(slot)? {
            SlotValue::Number(v) => Some(*v),
            SlotValue::Param(p) => config.number(p),
            SlotValue::Bool(_) => None,
        }
    }

    pub fn boolean(&self, slot: &str, config: &Configuration) -> Option<bool> {
        match self.bindings.get(slot)? {
            SlotValue::Bool(b) => Some(*b),
            SlotValue::Param(p) => config.values.get(p)?.as_bool(),
            SlotValue::Number(_) => None,
        }
    }

    pub fn curve<'a>(&self, slot: &str, config: &'a Configuration) -> Option<&'a BezierPath> {
        match self.bindings.get(slot)? {
            SlotValue::Param(p) => config.values.get(p)?.as_curve(),
            _ => None,
        }
    }

    /// Parameter bound to `slot`, if the slot is bound to a parameter.
    pub fn param_for(&self, slot: &str) -> Option<&str> {
        match self.bindings.get(slot)? {
            SlotValue::Param(p) => Some(p),
            _ => None,
        }
    }
}

/// A parametric artifact definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub id: String,
    pub parameters: Vec<ParameterDef>,
    /// Sorted by target name (stable), see [`Design::new`].
    pub constraints: Vec<Constraint>,
    pub generator: GeneratorBinding,
}

impl Design {
    /// Assembles a design, normalizing constraint order. Does not validate;
    /// see [`crate::dsl::check_design`].
    pub fn new(
        id: impl Into<String>,
        parameters: Vec<ParameterDef>,
        mut constraints: Vec<Constraint>,
        generator: GeneratorBinding,
    ) -> Self {
        constraints.sort_by(|a, b| a.target.cmp(&b.target));
        Self { id: id.into(), parameters, constraints, generator }
    }

    pub fn param(&self, name: &str) -> Option<&ParameterDef> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn constraints_on<'a>(&'a self, target: &'a str) -> impl Iterator<Item = &'a Constraint> + 'a {
        self.constraints.iter().filter(move |c| c.target == target)
    }

    pub fn dependents_of<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Constraint> + 'a {
        self.constraints.iter().filter(move |c| c.references().contains(&name))
    }

    pub fn default_configuration(&self) -> Configuration {
        Configuration {
            design_id: self.id.clone(),
            values: self.parameters.iter().map(|p| (p.name.clone(), p.default.clone())).collect(),
            pose: Pose::default(),
        }
    }

    /// Parameter names that carry a constraint.
    pub fn constrained_parameters(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.constraints.iter().map(|c| c.target.as_str()).collect();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    /// Radians about world up, in `[0, 2π)`.
    pub yaw: f64,
}

impl Default for Pose {
    fn default() -> Self {
        Self { position: Vec3::zeros(), yaw: 0.0 }
    }
}

impl Pose {
    pub fn new(position: Vec3, yaw: f64) -> Self {
        Self { position, yaw: normalize_angle(yaw) }
    }
}

/// Concrete values for one design's parameters plus placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub design_id: String,
    pub values: BTreeMap<String, ParamValue>,
    pub pose: Pose,
}

impl Configuration {
    pub fn number(&self, name: &str) -> Option<f64> {
        self.values.get(name)?.as_number()
    }

    pub fn value(&self, name: &str) -> Option<&ParamValue> {
        self.values.get(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_level_prefers_lower_on_tie() {
        let levels = [0.3, 0.4, 0.5];
        assert_eq!(nearest_level(levels.iter().copied(), 0.42), Some(0.4));
        assert_eq!(nearest_level([1.0, 2.0].into_iter(), 1.5), Some(1.0));
        assert_eq!(nearest_level(levels.iter().copied(), 9.0), Some(0.5));
    }

    #[test]
    fn linear_expr_display_round_trips_through_parts() {
        assert_eq!(LinearExpr::of("seat_depth", 1.0, 0.0).to_string(), "seat_depth");
        assert_eq!(LinearExpr::of("h", 1.2, -0.05).to_string(), "1.2*h - 0.05");
        assert_eq!(LinearExpr::of("h", -0.5, 0.3).to_string(), "-0.5*h + 0.3");
        assert_eq!(LinearExpr::constant(0.1).to_string(), "0.1");
    }

    #[test]
    fn text_length_counts_characters() {
        let k = ParamKind::Text { max_len: 3 };
        assert!(k.check_bounds(&ParamValue::Text("äöü".into())).is_ok());
        assert!(k.check_bounds(&ParamValue::Text("abcd".into())).is_err());
    }
}
