use std::sync::OnceLock;

use super::parse_design;
use crate::design::Design;

macro_rules! sources {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../designs/", $name, ".pdsl")))),*]
    };
}

/// `(id, source)` of every built-in design, in catalog order.
pub const BUILTIN_SOURCES: &[(&str, &str)] = sources![
    "vase_classic",
    "vase_twist",
    "vase_bulb",
    "vase_slim",
    "lampshade_drum",
    "lampshade_cone",
    "lampshade_bell",
    "lampshade_lean",
    "table_dining",
    "table_side",
    "shelf_bookcase",
    "shelf_cube",
    "shelf_wall",
    "bench",
    "bookholder",
];

/// The built-in catalog, parsed once.
pub fn list_builtin() -> &'static [Design] {
    static CATALOG: OnceLock<Vec<Design>> = OnceLock::new();
    CATALOG.get_or_init(|| {
        BUILTIN_SOURCES
            .iter()
            .map(|(name, src)| parse_design(src).unwrap_or_else(|e| panic!("built-in design {name}: {e}")))
            .collect()
    })
}

pub fn builtin(id: &str) -> Option<&'static Design> {
    list_builtin().iter().find(|d| d.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{validate, GeneratorKind, ParamKind};
    use crate::dsl::serialize_design;
    use crate::geometry::{diagnose, generate_mesh};

    #[test]
    fn composition() {
        let c = list_builtin();
        assert_eq!(c.len(), 15);
        let count = |k: GeneratorKind| c.iter().filter(|d| d.generator.generator == k).count();
        assert_eq!(count(GeneratorKind::Lathe), 8);
        assert_eq!(count(GeneratorKind::PanelTable), 2);
        assert_eq!(count(GeneratorKind::PanelShelf), 3);
        assert_eq!(count(GeneratorKind::PanelBench), 1);
        assert_eq!(count(GeneratorKind::PanelBookholder), 1);
        assert_eq!(builtin("bookholder").unwrap().parameters.len(), 3);
        for (name, _) in BUILTIN_SOURCES {
            assert_eq!(builtin(name).unwrap().id, *name);
        }
    }

    #[test]
    fn every_design_is_constrained_and_annotated() {
        for d in list_builtin() {
            assert!(!d.constraints.is_empty(), "{}", d.id);
            let curves = d.parameters.iter().filter(|p| matches!(p.kind, ParamKind::Curve { .. })).count();
            let tags = d.parameters.iter().filter(|p| p.ergonomic.is_some()).count();
            match d.generator.generator {
                GeneratorKind::Lathe => assert_eq!(curves, 1, "{}", d.id),
                GeneratorKind::PanelBench | GeneratorKind::PanelTable => assert!(tags > 0, "{}", d.id),
                _ => {}
            }
        }
    }

    #[test]
    fn defaults_valid_and_meshable() {
        for d in list_builtin() {
            let cfg = d.default_configuration();
            assert!(validate(d, &cfg).unwrap().is_valid(), "{}", d.id);
            let mesh = generate_mesh(d, &cfg).unwrap();
            let diag = diagnose(&mesh);
            assert!(diag.watertight_per_part.iter().all(|w| *w), "{}", d.id);
            assert!(diag.volume > 0.0, "{}", d.id);
        }
    }

    #[test]
    fn round_trip_is_canonical() {
        for d in list_builtin() {
            let text = serialize_design(d);
            let back = parse_design(&text).unwrap_or_else(|e| panic!("{}: {e}\n{text}", d.id));
            assert_eq!(&back, d);
            assert_eq!(serialize_design(&back), text);
        }
    }
}
