use super::lathe::{LatheRings, LatheSpec};
use super::panel::{BenchSpec, BookholderSpec, ShelfSpec, TableSpec};
use super::{Aabb, GeometryError, TriangleMesh};
use crate::design::{validate, Configuration, Design, GeneratorBinding, GeneratorKind};

/// Default angular steps for lathe designs.
pub const DEFAULT_SEGMENTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotType {
    /// Numeric, in meters.
    Length,
    /// Numeric, any unit (angles, counts).
    Number,
    Bool,
    Curve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotSpec {
    pub name: &'static str,
    pub ty: SlotType,
    pub required: bool,
}

const fn req(name: &'static str, ty: SlotType) -> SlotSpec {
    SlotSpec { name, ty, required: true }
}

const fn opt(name: &'static str, ty: SlotType) -> SlotSpec {
    SlotSpec { name, ty, required: false }
}

const LATHE: &[SlotSpec] = &[
    req("profile", SlotType::Curve),
    req("height", SlotType::Length),
    opt("diameter", SlotType::Length),
    opt("wall", SlotType::Length),
    opt("closed_bottom", SlotType::Bool),
    opt("twist", SlotType::Number),
    opt("lean", SlotType::Length),
    opt("segments", SlotType::Number),
];

const BENCH: &[SlotSpec] = &[
    req("width", SlotType::Length),
    req("seat_height", SlotType::Length),
    req("seat_depth", SlotType::Length),
    opt("seat_thickness", SlotType::Length),
    opt("leg_size", SlotType::Length),
    opt("backrest", SlotType::Bool),
    opt("backrest_height", SlotType::Length),
    opt("armrests", SlotType::Bool),
    opt("armrest_height", SlotType::Length),
    opt("armrest_depth", SlotType::Length),
    opt("armrest_width", SlotType::Length),
];

const TABLE: &[SlotSpec] = &[
    req("width", SlotType::Length),
    req("depth", SlotType::Length),
    req("height", SlotType::Length),
    opt("top_thickness", SlotType::Length),
    opt("leg_size", SlotType::Length),
];

const SHELF: &[SlotSpec] = &[
    req("width", SlotType::Length),
    req("height", SlotType::Length),
    req("depth", SlotType::Length),
    opt("compartments", SlotType::Number),
    opt("board_thickness", SlotType::Length),
    opt("back_panel", SlotType::Bool),
];

const BOOKHOLDER: &[SlotSpec] = &[
    req("width", SlotType::Length),
    req("depth", SlotType::Length),
    req("back_height", SlotType::Length),
    opt("thickness", SlotType::Length),
    opt("lip_height", SlotType::Length),
];

pub fn slot_specs(kind: GeneratorKind) -> &'static [SlotSpec] {
    match kind {
        GeneratorKind::Lathe => LATHE,
        GeneratorKind::PanelBench => BENCH,
        GeneratorKind::PanelTable => TABLE,
        GeneratorKind::PanelShelf => SHELF,
        GeneratorKind::PanelBookholder => BOOKHOLDER,
    }
}

struct Slots<'a> {
    binding: &'a GeneratorBinding,
    config: &'a Configuration,
}

impl Slots<'_> {
    fn num(&self, slot: &str) -> Result<f64, GeometryError> {
        self.binding.number(slot, self.config).ok_or_else(|| GeometryError::MissingSlot(slot.to_string()))
    }

    fn num_or(&self, slot: &str, default: f64) -> f64 {
        self.binding.number(slot, self.config).unwrap_or(default)
    }

    fn flag_or(&self, slot: &str, default: bool) -> bool {
        self.binding.boolean(slot, self.config).unwrap_or(default)
    }
}

pub fn lathe_spec(design: &Design, config: &Configuration) -> Result<LatheSpec, GeometryError> {
    let s = Slots { binding: &design.generator, config };
    let profile = design
        .generator
        .curve("profile", config)
        .ok_or_else(|| GeometryError::MissingSlot("profile".into()))?
        .clone();
    Ok(LatheSpec {
        profile,
        height: s.num("height")?,
        diameter: design.generator.number("diameter", config),
        wall: s.num_or("wall", 0.0),
        closed_bottom: s.flag_or("closed_bottom", true),
        twist: s.num_or("twist", 0.0),
        lean: s.num_or("lean", 0.0),
        segments: s.num_or("segments", DEFAULT_SEGMENTS as f64).round().max(3.0) as usize,
    })
}

fn bench_spec(s: &Slots) -> Result<BenchSpec, GeometryError> {
    let seat_height = s.num("seat_height")?;
    let seat_depth = s.num("seat_depth")?;
    Ok(BenchSpec {
        width: s.num("width")?,
        seat_height,
        seat_depth,
        seat_thickness: s.num_or("seat_thickness", 0.04),
        leg_size: s.num_or("leg_size", 0.05),
        backrest: s.flag_or("backrest", false),
        backrest_height: s.num_or("backrest_height", 0.4),
        armrests: s.flag_or("armrests", false),
        armrest_height: s.num_or("armrest_height", seat_height + 0.2),
        armrest_depth: s.num_or("armrest_depth", seat_depth),
        armrest_width: s.num_or("armrest_width", 0.05),
    })
}

fn table_spec(s: &Slots) -> Result<TableSpec, GeometryError> {
    Ok(TableSpec {
        width: s.num("width")?,
        depth: s.num("depth")?,
        height: s.num("height")?,
        top_thickness: s.num_or("top_thickness", 0.03),
        leg_size: s.num_or("leg_size", 0.05),
    })
}

fn shelf_spec(s: &Slots) -> Result<ShelfSpec, GeometryError> {
    Ok(ShelfSpec {
        width: s.num("width")?,
        height: s.num("height")?,
        depth: s.num("depth")?,
        compartments: s.num_or("compartments", 3.0).round().max(1.0) as usize,
        board_thickness: s.num_or("board_thickness", 0.018),
        back_panel: s.flag_or("back_panel", false),
    })
}

fn bookholder_spec(s: &Slots) -> Result<BookholderSpec, GeometryError> {
    Ok(BookholderSpec {
        width: s.num("width")?,
        depth: s.num("depth")?,
        back_height: s.num("back_height")?,
        thickness: s.num_or("thickness", 0.01),
        lip_height: s.num_or("lip_height", 0.03),
    })
}

/// Mesh in the design-local frame, without validating the configuration.
pub fn generate_local_mesh(design: &Design, config: &Configuration) -> Result<TriangleMesh, GeometryError> {
    let s = Slots { binding: &design.generator, config };
    Ok(match design.generator.generator {
        GeneratorKind::Lathe => lathe_spec(design, config)?.mesh()?,
        GeneratorKind::PanelBench => bench_spec(&s)?.mesh(),
        GeneratorKind::PanelTable => table_spec(&s)?.mesh(),
        GeneratorKind::PanelShelf => shelf_spec(&s)?.mesh(),
        GeneratorKind::PanelBookholder => bookholder_spec(&s)?.mesh(),
    })
}

/// Generates the posed mesh for a valid configuration.
pub fn generate_mesh(design: &Design, config: &Configuration) -> Result<TriangleMesh, GeometryError> {
    let report = validate(design, config).map_err(|e| GeometryError::InvalidConfiguration(vec![e.to_string()]))?;
    if !report.is_valid() {
        return Err(GeometryError::InvalidConfiguration(report.violations.iter().map(|v| v.to_string()).collect()));
    }
    let local = generate_local_mesh(design, config)?;
    Ok(local.posed(&config.pose.position, config.pose.yaw))
}

/// Interior space a design offers, in the design-local frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Cavity {
    Lathe(LatheRings),
    Box(Aabb),
}

pub fn cavity(design: &Design, config: &Configuration) -> Result<Option<Cavity>, GeometryError> {
    let s = Slots { binding: &design.generator, config };
    Ok(match design.generator.generator {
        GeneratorKind::Lathe => {
            let rings = lathe_spec(design, config)?.rings()?;
            rings.inner.is_some().then_some(Cavity::Lathe(rings))
        }
        GeneratorKind::PanelBench => Some(Cavity::Box(bench_spec(&s)?.cavity())),
        GeneratorKind::PanelTable => Some(Cavity::Box(table_spec(&s)?.cavity())),
        GeneratorKind::PanelShelf => Some(Cavity::Box(shelf_spec(&s)?.cavity())),
        GeneratorKind::PanelBookholder => None,
    })
}
