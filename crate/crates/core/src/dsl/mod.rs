//! Text format for design definitions (`.pdsl`) and the built-in catalog.
//!
//! ```text
//! design "vase" {
//!   param height : continuous(10, 40) cm default 25 group "basic";
//!   param wall : continuous(0, 5) mm in [0, 0.01*height] default 2;
//!   generator lathe { height = height; wall = wall; }
//! }
//! ```
//!
//! A unit keyword after a numeric kind (`m`, `cm`, `mm`, `deg`, `rad`) sets
//! the scale of bare literals in that statement; literals may also carry a
//! suffix (`35cm`). Values are stored in meters and radians.

mod catalog;
mod lexer;
mod parser;
mod serialize;

use std::collections::{HashMap, HashSet};
use std::fmt;

pub use catalog::{builtin, list_builtin, BUILTIN_SOURCES};
pub use lexer::Suffix;
pub use serialize::serialize_design;

use crate::design::{Bound, CurvePlane, Design, GeneratorKind, ParamKind, SlotValue, Unit};
use crate::geometry::{slot_specs, SlotType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DslErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("duplicate parameter `{0}`")]
    DuplicateParameter(String),
    #[error("unknown reference `{0}`")]
    UnknownReference(String),
    #[error("invalid default for `{parameter}`: {message}")]
    InvalidDefault { parameter: String, message: String },
    #[error("generator slot `{0}` is not bound")]
    UnboundGeneratorSlot(String),
    #[error("invalid definition: {0}")]
    InvalidDefinition(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DslError {
    pub kind: DslErrorKind,
    pub pos: Option<Pos>,
}

impl DslError {
    pub fn at(kind: DslErrorKind, pos: Pos) -> Self {
        Self { kind, pos: Some(pos) }
    }

    fn bare(kind: DslErrorKind) -> Self {
        Self { kind, pos: None }
    }
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pos {
            Some(p) => write!(f, "{p}: {}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

impl std::error::Error for DslError {}

/// Where named items were declared, for error positions.
#[derive(Debug, Clone, Default)]
pub(crate) struct SourcePositions {
    pub params: HashMap<String, Pos>,
    pub constraints: HashMap<String, Pos>,
    pub slots: HashMap<String, Pos>,
    pub generator: Option<Pos>,
}

/// Parses and checks one design document.
pub fn parse_design(src: &str) -> Result<Design, DslError> {
    let mut p = parser::Parser::new(src)?;
    let design = p.document()?;
    check(&design, &p.positions)?;
    Ok(design)
}

/// Checks cross-references, kind invariants, defaults and generator slots.
pub fn check_design(design: &Design) -> Result<(), DslError> {
    check(design, &SourcePositions::default())
}

const RESERVED: &[&str] = &["true", "false", "path"];

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.contains(&s)
}

fn check(design: &Design, pos: &SourcePositions) -> Result<(), DslError> {
    let err = |kind: DslErrorKind, at: Option<&Pos>| DslError { kind, pos: at.copied() };
    let mut seen = HashSet::new();
    for p in &design.parameters {
        let at = pos.params.get(&p.name);
        if !seen.insert(p.name.as_str()) {
            return Err(err(DslErrorKind::DuplicateParameter(p.name.clone()), at));
        }
        if !is_identifier(&p.name) {
            return Err(err(DslErrorKind::InvalidDefinition(format!("`{}` is not a valid name", p.name)), at));
        }
        check_kind(&p.kind).map_err(|m| err(DslErrorKind::InvalidDefinition(format!("`{}`: {m}", p.name)), at))?;
        if !p.kind.accepts(&p.default) {
            let message = format!("expected a {} value", p.kind.name());
            return Err(err(DslErrorKind::InvalidDefault { parameter: p.name.clone(), message }, at));
        }
        p.kind
            .check_bounds(&p.default)
            .map_err(|message| err(DslErrorKind::InvalidDefault { parameter: p.name.clone(), message }, at))?;
    }

    let numeric = |name: &str| design.param(name).filter(|p| p.kind.is_numeric());
    let must_exist = |name: &str, at: Option<&Pos>| -> Result<(), DslError> {
        if design.param(name).is_none() {
            return Err(err(DslErrorKind::UnknownReference(name.to_string()), at));
        }
        if numeric(name).is_none() {
            return Err(err(DslErrorKind::InvalidDefinition(format!("`{name}` is not numeric")), at));
        }
        Ok(())
    };

    for p in &design.parameters {
        let at = pos.params.get(&p.name);
        if let Some(e) = &p.ergonomic {
            if p.kind.unit() != Some(Unit::Length) {
                return Err(err(DslErrorKind::InvalidDefinition(format!("`{}`: ergonomic tag needs a length", p.name)), at));
            }
            if let Some(o) = &e.offset_param {
                must_exist(o, at)?;
            }
        }
        if let Some(h) = &p.handle {
            if !p.kind.is_numeric() {
                return Err(err(DslErrorKind::InvalidDefinition(format!("`{}`: handle needs a number", p.name)), at));
            }
            for r in h.anchor.references().chain(h.axis.references()) {
                must_exist(r, at)?;
            }
            if !(h.scale.is_finite() && h.scale != 0.0) {
                return Err(err(DslErrorKind::InvalidDefinition(format!("`{}`: handle scale must be non-zero", p.name)), at));
            }
        }
    }

    for c in &design.constraints {
        let at = pos.constraints.get(&c.target);
        must_exist(&c.target, at)?;
        for r in c.references() {
            must_exist(r, at)?;
            if r == c.target {
                return Err(err(DslErrorKind::InvalidDefinition(format!("`{}` is bounded by itself", r)), at));
            }
        }
        check_bound_order(design, &c.bound)
            .map_err(|m| err(DslErrorKind::InvalidDefinition(format!("constraint on `{}`: {m}", c.target)), at))?;
    }

    let defaults = design.default_configuration();
    for c in &design.constraints {
        let v = defaults.number(&c.target).unwrap_or(f64::NAN);
        let ok = matches!(c.interval(&defaults), Some((lo, hi)) if v >= lo && v <= hi);
        if !ok {
            let message = format!("{v} violates `{c}`");
            return Err(err(DslErrorKind::InvalidDefault { parameter: c.target.clone(), message }, pos.constraints.get(&c.target)));
        }
    }

    for p in &design.parameters {
        if let Some(h) = &p.handle {
            let axis = h.axis.eval(&defaults).unwrap_or_default();
            if !(axis.norm() > 1e-12) {
                let m = format!("`{}`: handle axis is zero at defaults", p.name);
                return Err(err(DslErrorKind::InvalidDefinition(m), pos.params.get(&p.name)));
            }
        }
    }

    check_generator(design, pos)
}

fn check_kind(kind: &ParamKind) -> Result<(), String> {
    match kind {
        ParamKind::Continuous { min, max, .. } => {
            if !(min.is_finite() && max.is_finite() && min < max) {
                return Err(format!("range [{min}, {max}] must have min < max"));
            }
        }
        ParamKind::Discrete { levels, .. } => {
            if levels.is_empty() || levels.iter().any(|l| !l.is_finite()) {
                return Err("levels must be non-empty and finite".into());
            }
            if levels.windows(2).any(|w| w[0] >= w[1]) {
                return Err("levels must be strictly increasing".into());
            }
        }
        ParamKind::Option { labels } => {
            if labels.is_empty() {
                return Err("option needs at least one label".into());
            }
            let unique: HashSet<_> = labels.iter().collect();
            if unique.len() != labels.len() {
                return Err("option labels must be unique".into());
            }
        }
        ParamKind::Curve { segment_budget, .. } => {
            if *segment_budget == 0 {
                return Err("segment budget must be at least 1".into());
            }
        }
        ParamKind::Boolean | ParamKind::Text { .. } => {}
    }
    Ok(())
}

/// Linear bounds only need checking at the ends of the referenced range.
fn check_bound_order(design: &Design, bound: &Bound) -> Result<(), String> {
    let (lo, hi) = match bound {
        Bound::Absolute { lo, hi } => {
            return if lo.is_finite() && hi.is_finite() && lo <= hi { Ok(()) } else { Err(format!("[{lo}, {hi}] is empty")) };
        }
        Bound::Relative { lo, hi } => (lo, hi),
    };
    for e in [lo, hi] {
        if !(e.coeff.is_finite() && e.offset.is_finite()) {
            return Err("non-finite coefficient".into());
        }
    }
    let range = |e: &crate::design::LinearExpr| {
        e.param.as_deref().and_then(|p| design.param(p)).and_then(|d| d.kind.numeric_range()).unwrap_or((0.0, 0.0))
    };
    let ((a0, a1), (b0, b1)) = (range(lo), range(hi));
    let same = lo.param.is_some() && lo.param == hi.param;
    for x in [a0, a1] {
        for y in [b0, b1] {
            if same && x != y {
                continue;
            }
            let (l, h) = (lo.eval(|_| Some(x)), hi.eval(|_| Some(y)));
            if l > h {
                return Err(format!("lower bound `{lo}` exceeds upper bound `{hi}`"));
            }
        }
    }
    Ok(())
}

fn slot_compatible(design: &Design, ty: SlotType, value: &SlotValue) -> Result<(), String> {
    let param = match value {
        SlotValue::Number(v) => {
            return match ty {
                SlotType::Length | SlotType::Number if v.is_finite() => Ok(()),
                _ => Err(format!("literal {v} does not fit")),
            }
        }
        SlotValue::Bool(_) => return if ty == SlotType::Bool { Ok(()) } else { Err("boolean literal does not fit".into()) },
        SlotValue::Param(p) => design.param(p).expect("checked by caller"),
    };
    let ok = match ty {
        SlotType::Length => param.kind.is_numeric() && param.kind.unit() == Some(Unit::Length),
        SlotType::Number => param.kind.is_numeric(),
        SlotType::Bool => param.kind == ParamKind::Boolean,
        SlotType::Curve => matches!(param.kind, ParamKind::Curve { plane: CurvePlane::LatheProfile, .. }),
    };
    if ok {
        Ok(())
    } else {
        Err(format!("`{}` ({}) does not fit", param.name, param.kind.name()))
    }
}

fn check_generator(design: &Design, pos: &SourcePositions) -> Result<(), DslError> {
    let specs = slot_specs(design.generator.generator);
    let gpos = pos.generator;
    for (slot, value) in &design.generator.bindings {
        let at = pos.slots.get(slot).copied().or(gpos);
        let Some(spec) = specs.iter().find(|s| s.name == slot) else {
            let m = format!("generator {} has no slot `{slot}`", design.generator.generator.name());
            return Err(DslError { kind: DslErrorKind::InvalidDefinition(m), pos: at });
        };
        if let SlotValue::Param(p) = value {
            if design.param(p).is_none() {
                return Err(DslError { kind: DslErrorKind::UnknownReference(p.clone()), pos: at });
            }
        }
        slot_compatible(design, spec.ty, value)
            .map_err(|m| DslError { kind: DslErrorKind::InvalidDefinition(format!("slot `{slot}`: {m}")), pos: at })?;
    }
    for spec in specs.iter().filter(|s| s.required) {
        if !design.generator.bindings.contains_key(spec.name) {
            return Err(DslError { kind: DslErrorKind::UnboundGeneratorSlot(spec.name.to_string()), pos: gpos });
        }
    }
    if design.generator.generator == GeneratorKind::Lathe {
        let curves = design.parameters.iter().filter(|p| matches!(p.kind, ParamKind::Curve { .. })).count();
        if curves == 0 {
            return Err(DslError::bare(DslErrorKind::InvalidDefinition("lathe design needs a curve parameter".into())));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
design "mini" {
  param profile : curve(2, lathe) default path((0.05, 0), (0.06, 0.03), (0.06, 0.07), (0.05, 0.1));
  param h : continuous(10, 40) cm default 25;
  generator lathe { profile = profile; height = h; }
}
"#;

    #[test]
    fn minimal_document() {
        let d = parse_design(MINIMAL).unwrap();
        assert_eq!(d.id, "mini");
        assert_eq!(d.parameters.len(), 2);
        let ParamKind::Continuous { min, max, unit } = &d.param("h").unwrap().kind else { panic!() };
        assert!((min - 0.1).abs() < 1e-12 && (max - 0.4).abs() < 1e-12);
        assert_eq!(*unit, Unit::Length);
        assert_eq!(d.param("h").unwrap().group, "basic");
    }

    #[test]
    fn duplicate_parameter() {
        let src = r#"design "d" {
  param h : continuous(0.1, 0.4) m default 0.2;
  param h : continuous(0.1, 0.4) m default 0.2;
  generator panel_table { width = h; depth = h; height = h; }
}"#;
        let e = parse_design(src).unwrap_err();
        assert_eq!(e.kind, DslErrorKind::DuplicateParameter("h".into()));
        assert_eq!(e.pos, Some(Pos { line: 3, col: 9 }));
    }

    #[test]
    fn unknown_reference_in_constraint() {
        let src = r#"design "b" {
  param armrest_depth : continuous(0.1, 0.6) m default 0.3;
  constraint armrest_depth in [0.1, seat_depth];
  generator panel_table { width = armrest_depth; depth = armrest_depth; height = armrest_depth; }
}"#;
        let e = parse_design(src).unwrap_err();
        assert_eq!(e.kind, DslErrorKind::UnknownReference("seat_depth".into()));
        assert_eq!(e.pos.unwrap().line, 3);
    }

    #[test]
    fn invalid_default_and_unbound_slot() {
        let src = r#"design "t" { param w : continuous(0.5, 1) m default 2; generator panel_table { width = w; depth = w; height = w; } }"#;
        assert!(matches!(parse_design(src).unwrap_err().kind, DslErrorKind::InvalidDefault { .. }));
        let src = r#"design "t" { param w : continuous(0.5, 1) m default 0.7; generator panel_table { width = w; depth = w; } }"#;
        assert_eq!(parse_design(src).unwrap_err().kind, DslErrorKind::UnboundGeneratorSlot("height".into()));
    }

    #[test]
    fn default_must_satisfy_constraints() {
        let src = r#"design "t" {
  param w : continuous(0.5, 1) m in [0.8, 1] default 0.7;
  generator panel_table { width = w; depth = w; height = w; }
}"#;
        assert!(matches!(parse_design(src).unwrap_err().kind, DslErrorKind::InvalidDefault { .. }));
    }

    #[test]
    fn relative_bound_with_offset_and_units() {
        let src = r#"design "t" {
  param w : continuous(50, 100) cm default 80;
  param d : continuous(20, 80) cm in [20, 0.5*w + 10] default 40;
  generator panel_table { width = w; depth = d; height = 0.7; }
}"#;
        let d = parse_design(src).unwrap();
        let c = &d.constraints[0];
        assert_eq!(c.hi_expr().param.as_deref(), Some("w"));
        assert!((c.hi_expr().coeff - 0.5).abs() < 1e-12);
        assert!((c.hi_expr().offset - 0.1).abs() < 1e-12);
        assert!((c.lo_expr().offset - 0.2).abs() < 1e-12);
    }

    #[test]
    fn inverted_relative_bound_is_rejected() {
        let src = r#"design "t" {
  param w : continuous(0.5, 1) m default 0.8;
  param d : continuous(0.2, 0.8) m in [w, 0.6] default 0.55;
  generator panel_table { width = w; depth = d; height = 0.7; }
}"#;
        assert!(matches!(parse_design(src).unwrap_err().kind, DslErrorKind::InvalidDefinition(_)));
    }

    #[test]
    fn kind_mismatch_on_slot() {
        let src = r#"design "t" {
  param w : continuous(0.5, 1) default 0.8;
  generator panel_table { width = w; depth = 0.5; height = 0.7; }
}"#;
        assert!(matches!(parse_design(src).unwrap_err().kind, DslErrorKind::InvalidDefinition(_)));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        for src in ["", "design", "design \"x\" {", "design \"x\" { param : }", "design \"x\" {} extra", "param"] {
            let e = parse_design(src).unwrap_err();
            assert!(matches!(e.kind, DslErrorKind::Syntax(_)), "{src}: {e}");
            assert!(e.pos.is_some());
        }
    }
}
