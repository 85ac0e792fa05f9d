use std::collections::BTreeMap;

use insitu_core::design::{
    Bound, Constraint, Design, ErgonomicBinding, GeneratorBinding, GeneratorKind, HandleDef, LinearExpr, ParamKind,
    ParamValue, ParameterDef, SlotValue, Unit, Vec3Expr,
};
use insitu_core::dsl::{check_design, list_builtin, parse_design, serialize_design};
use insitu_core::ergonomics::ErgonomicTag;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-10.0..10.0f64, (-1000i32..1000).prop_map(|i| i as f64 / 100.0), Just(0.0)]
}

fn text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 _\"\\\\\n\té-]{0,12}"
}

fn kind_and_default() -> impl Strategy<Value = (ParamKind, ParamValue)> {
    prop_oneof![
        (finite(), 0.001..5.0f64, 0.0..1.0f64, prop_oneof![Just(Unit::Length), Just(Unit::Angle), Just(Unit::Unitless)])
            .prop_map(|(min, span, f, unit)| {
                (ParamKind::Continuous { min, max: min + span, unit }, ParamValue::Number(min + f * span))
            }),
        (prop::collection::btree_set(-500i32..500, 1..6), any::<prop::sample::Index>()).prop_map(|(set, i)| {
            let levels: Vec<f64> = set.into_iter().map(|l| l as f64 / 100.0).collect();
            let d = levels[i.index(levels.len())];
            (ParamKind::Discrete { levels, unit: Unit::Length }, ParamValue::Number(d))
        }),
        (prop::collection::btree_set(text(), 1..4), any::<prop::sample::Index>()).prop_map(|(set, i)| {
            let labels: Vec<String> = set.into_iter().collect();
            let d = labels[i.index(labels.len())].clone();
            (ParamKind::Option { labels }, ParamValue::Text(d))
        }),
        any::<bool>().prop_map(|b| (ParamKind::Boolean, ParamValue::Bool(b))),
        (text(), 0usize..10).prop_map(|(t, extra)| {
            (ParamKind::Text { max_len: t.chars().count() + extra }, ParamValue::Text(t))
        }),
    ]
}

fn expr(names: Vec<String>) -> impl Strategy<Value = LinearExpr> {
    (finite(), prop::option::of(prop::sample::select(names)), finite())
        .prop_map(|(coeff, param, offset)| match param {
            Some(p) => LinearExpr { coeff, param: Some(p), offset },
            None => LinearExpr::constant(offset),
        })
}

prop_compose! {
    fn design()(
        id in text(),
        specs in prop::collection::vec(("[a-z][a-z0-9_]{0,6}", kind_and_default(), "[a-z]{1,8}"), 1..6),
        seed in any::<u64>(),
    )(
        exprs in prop::collection::vec(expr(specs.iter().map(|s| s.0.clone()).collect()), 6),
        id in Just(id),
        specs in Just(specs),
        seed in Just(seed),
    ) -> Design {
        let mut params: Vec<ParameterDef> = Vec::new();
        for (name, (kind, default), group) in specs {
            if params.iter().any(|p| p.name == name) || ["true", "false", "path"].contains(&name.as_str()) {
                continue;
            }
            params.push(ParameterDef { name, kind, default, group, ergonomic: None, handle: None });
        }
        let numeric: Vec<usize> = (0..params.len()).filter(|&i| params[i].kind.is_numeric()).collect();
        let mut constraints = Vec::new();
        let mut bindings = BTreeMap::new();
        for slot in ["width", "seat_height", "seat_depth"] {
            bindings.insert(slot.to_string(), SlotValue::Number(0.5));
        }
        if let Some(&i) = numeric.first() {
            let name = params[i].name.clone();
            let v = params[i].default.as_number().unwrap();
            constraints.push(Constraint { target: name.clone(), bound: Bound::Absolute { lo: v - 1.0, hi: v + 0.5 } });
            let e = &exprs[(seed % 6) as usize];
            if e.param.as_deref().is_some_and(|p| p != name) {
                let (lo, hi) = (e.clone(), LinearExpr { offset: e.offset + 1e6, ..e.clone() });
                constraints.push(Constraint { target: name.clone(), bound: Bound::Relative { lo, hi } });
            }
            if params[i].kind.unit() == Some(Unit::Length) {
                bindings.insert("width".into(), SlotValue::Param(name.clone()));
                params[i].ergonomic = Some(ErgonomicBinding {
                    tag: ErgonomicTag::ALL[(seed % 5) as usize],
                    offset_param: (seed % 2 == 0).then(|| name.clone()),
                });
            }
            params[i].handle = Some(HandleDef {
                anchor: Vec3Expr([exprs[1].clone(), exprs[2].clone(), LinearExpr::constant(0.25)]),
                axis: Vec3Expr([LinearExpr::constant(1.0), LinearExpr::constant(0.0), exprs[3].clone()]),
                scale: if exprs[4].offset == 0.0 { 1.0 } else { exprs[4].offset },
            });
        }
        match params.iter().find(|p| p.kind == ParamKind::Boolean) {
            Some(p) => bindings.insert("backrest".into(), SlotValue::Param(p.name.clone())),
            None => bindings.insert("backrest".into(), SlotValue::Bool(seed % 3 == 0)),
        };
        Design::new(id, params, constraints, GeneratorBinding { generator: GeneratorKind::PanelBench, bindings })
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn parser_never_panics_on_noise(src in "\\PC{0,200}") {
        let _ = parse_design(&src);
    }

    #[test]
    fn parser_never_panics_on_token_soup(
        words in prop::collection::vec(prop::sample::select(vec![
            "design", "\"x\"", "{", "}", "param", "a", "b", ":", "continuous", "discrete", "curve", "text",
            "option", "boolean", "(", ")", "[", "]", ",", ";", "in", "default", "1", "-", "2.5cm", "*", "+",
            "generator", "lathe", "panel_table", "=", "path", "true", "handle", "anchor", "axis", "scale",
            "ergonomic", "seat_height", "group", "constraint", "m", "deg", "1e400", "99999999999",
        ]), 0..60)
    ) {
        let src = words.join(" ");
        if let Err(e) = parse_design(&src) {
            prop_assert!(e.pos.is_some() || !matches!(e.kind, insitu_core::dsl::DslErrorKind::Syntax(_)));
        }
    }

    #[test]
    fn mutated_builtins_never_panic(idx in 0usize..15, cut in 0usize..2000, byte in any::<u8>()) {
        let text = serialize_design(&list_builtin()[idx]);
        let mut bytes = text.into_bytes();
        let at = cut % bytes.len();
        bytes[at] = byte;
        let _ = parse_design(&String::from_utf8_lossy(&bytes));
        bytes.truncate(at);
        let _ = parse_design(&String::from_utf8_lossy(&bytes));
    }

    #[test]
    fn round_trip_generated(d in design()) {
        prop_assume!(check_design(&d).is_ok());
        let text = serialize_design(&d);
        let back = parse_design(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(serialize_design(&back), text);
    }
}

#[test]
fn generated_designs_mostly_pass_the_checker() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let mut runner = TestRunner::deterministic();
    let ok = (0..200)
        .filter(|_| check_design(&design().new_tree(&mut runner).unwrap().current()).is_ok())
        .count();
    assert!(ok > 100, "only {ok} of 200 generated designs were well-formed");
}
