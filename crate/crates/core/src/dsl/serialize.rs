use std::fmt::Write;

use crate::design::{Design, LinearExpr, ParamKind, ParamValue, ParameterDef, SlotValue, Unit, Vec3Expr};
use crate::design::CurvePlane;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn unit_word(unit: &Unit) -> &'static str {
    match unit {
        Unit::Length => " m",
        Unit::Angle => " rad",
        Unit::Unitless => "",
    }
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

fn kind(k: &ParamKind) -> String {
    match k {
        ParamKind::Continuous { min, max, unit } => format!("continuous({min}, {max}){}", unit_word(unit)),
        ParamKind::Discrete { levels, unit } => format!("discrete({}){}", join(levels, |l| l.to_string()), unit_word(unit)),
        ParamKind::Option { labels } => format!("option({})", join(labels, |l| quote(l))),
        ParamKind::Boolean => "boolean".into(),
        ParamKind::Text { max_len } => format!("text({max_len})"),
        ParamKind::Curve { segment_budget, plane } => {
            let plane = match plane {
                CurvePlane::LatheProfile => "lathe",
                CurvePlane::Silhouette => "silhouette",
            };
            format!("curve({segment_budget}, {plane})")
        }
    }
}

fn value(v: &ParamValue) -> String {
    match v {
        ParamValue::Number(x) => x.to_string(),
        ParamValue::Bool(b) => b.to_string(),
        ParamValue::Text(s) => quote(s),
        ParamValue::Curve(path) => {
            format!("path({})", join(&path.control_points(), |p| format!("({}, {})", p.x, p.y)))
        }
    }
}

fn vec3(v: &Vec3Expr) -> String {
    format!("({})", join(&v.0, LinearExpr::to_string))
}

fn param(p: &ParameterDef) -> String {
    let mut s = format!("  param {} : {} default {} group {}", p.name, kind(&p.kind), value(&p.default), quote(&p.group));
    if let Some(e) = &p.ergonomic {
        write!(s, " ergonomic {}", e.tag.name()).unwrap();
        if let Some(o) = &e.offset_param {
            write!(s, " + {o}").unwrap();
        }
    }
    if let Some(h) = &p.handle {
        write!(s, " handle anchor{} axis{} scale {}", vec3(&h.anchor), vec3(&h.axis), h.scale).unwrap();
    }
    s.push_str(";\n");
    s
}

/// Canonical text: parameters in declaration order, constraints by target,
/// generator slots by name.
pub fn serialize_design(d: &Design) -> String {
    let mut out = format!("design {} {{\n", quote(&d.id));
    for p in &d.parameters {
        out.push_str(&param(p));
    }
    for c in &d.constraints {
        writeln!(out, "  constraint {};", c).unwrap();
    }
    writeln!(out, "  generator {} {{", d.generator.generator.name()).unwrap();
    for (slot, v) in &d.generator.bindings {
        let v = match v {
            SlotValue::Param(p) => p.clone(),
            SlotValue::Number(x) => x.to_string(),
            SlotValue::Bool(b) => b.to_string(),
        };
        writeln!(out, "    {slot} = {v};").unwrap();
    }
    out.push_str("  }\n}\n");
    out
}
