//! Anthropometric range recommendations for ergonomically tagged parameters.
//!
//! Recommendations only annotate slider ranges; they never change a
//! configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::design::{Configuration, Design};

const BUILTIN_TABLE: &str = include_str!("../data/ergonomics.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErgonomicTag {
    SeatHeight,
    SeatDepth,
    SeatWidthPerPerson,
    TableHeight,
    ArmrestHeightAboveSeat,
}

impl ErgonomicTag {
    pub const ALL: [ErgonomicTag; 5] = [
        ErgonomicTag::SeatHeight,
        ErgonomicTag::SeatDepth,
        ErgonomicTag::SeatWidthPerPerson,
        ErgonomicTag::TableHeight,
        ErgonomicTag::ArmrestHeightAboveSeat,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ErgonomicTag::SeatHeight => "seat_height",
            ErgonomicTag::SeatDepth => "seat_depth",
            ErgonomicTag::SeatWidthPerPerson => "seat_width_per_person",
            ErgonomicTag::TableHeight => "table_height",
            ErgonomicTag::ArmrestHeightAboveSeat => "armrest_height_above_seat",
        }
    }
}

impl fmt::Display for ErgonomicTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErgonomicTag {
    type Err = ErgonomicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ErgonomicTag::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| ErgonomicsError::UnknownTag(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Build {
    Slim,
    Average,
    Broad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyProfile {
    /// Meters, within `[1.0, 2.3]`.
    pub stature: f64,
    pub build: Build,
}

impl BodyProfile {
    pub fn new(stature: f64, build: Build) -> Result<Self, ErgonomicsError> {
        let p = Self { stature, build };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<(), ErgonomicsError> {
        if (1.0..=2.3).contains(&self.stature) {
            Ok(())
        } else {
            Err(ErgonomicsError::InvalidProfile(self.stature))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecommendedRange {
    pub lo: f64,
    pub hi: f64,
    /// Set when the ranges did not intersect and a compromise band was used.
    pub compromise: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ErgonomicsError {
    #[error("unknown ergonomic tag `{0}`")]
    UnknownTag(String),
    #[error("stature {0} m outside [1.0, 2.3]")]
    InvalidProfile(f64),
    #[error("no body profiles given")]
    EmptyProfileList,
    #[error("invalid coefficient table: {0}")]
    Table(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Basis {
    Stature,
    Fixed,
}

#[derive(Debug, Clone, Deserialize)]
struct Rule {
    tag: String,
    basis: Basis,
    lo: f64,
    hi: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct RawTable {
    schema_version: u32,
    build_multiplier: BTreeMap<Build, f64>,
    rule: Vec<Rule>,
}

/// Coefficient table keyed by tag.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    rules: BTreeMap<ErgonomicTag, (Basis, f64, f64)>,
    build_multiplier: BTreeMap<Build, f64>,
}

impl CoefficientTable {
    pub fn from_toml(text: &str) -> Result<Self, ErgonomicsError> {
        let raw: RawTable = toml::from_str(text).map_err(|e| ErgonomicsError::Table(e.to_string()))?;
        if raw.schema_version != 1 {
            return Err(ErgonomicsError::Table(format!("unsupported schema_version {}", raw.schema_version)));
        }
        let mut rules = BTreeMap::new();
        for r in raw.rule {
            let tag: ErgonomicTag = r.tag.parse()?;
            if !(r.lo <= r.hi) {
                return Err(ErgonomicsError::Table(format!("rule {} has lo > hi", r.tag)));
            }
            rules.insert(tag, (r.basis, r.lo, r.hi));
        }
        Ok(Self { rules, build_multiplier: raw.build_multiplier })
    }

    /// The table shipped in `data/ergonomics.toml`.
    pub fn builtin() -> &'static CoefficientTable {
        static TABLE: OnceLock<CoefficientTable> = OnceLock::new();
        TABLE.get_or_init(|| CoefficientTable::from_toml(BUILTIN_TABLE).expect("builtin ergonomics table"))
    }

    fn is_additive(&self, tag: ErgonomicTag) -> bool {
        matches!(self.rules.get(&tag), Some((Basis::Fixed, _, _)))
    }

    pub fn recommend(&self, tag: ErgonomicTag, profile: &BodyProfile) -> Result<RecommendedRange, ErgonomicsError> {
        profile.check()?;
        let (basis, lo, hi) = *self.rules.get(&tag).ok_or_else(|| ErgonomicsError::UnknownTag(tag.name().into()))?;
        let (lo, hi) = match basis {
            Basis::Stature => (lo * profile.stature, hi * profile.stature),
            Basis::Fixed => {
                let m = self.build_multiplier.get(&profile.build).copied().unwrap_or(1.0);
                (lo * m, hi * m)
            }
        };
        Ok(RecommendedRange { lo, hi, compromise: false })
    }

    /// Combines individual ranges for a group of future users. Fixed-basis
    /// tags (per-person widths) add up; stature-based tags intersect, falling
    /// back to the band between the nearest endpoints when disjoint.
    pub fn reconcile(&self, tag: ErgonomicTag, profiles: &[BodyProfile]) -> Result<RecommendedRange, ErgonomicsError> {
        if profiles.is_empty() {
            return Err(ErgonomicsError::EmptyProfileList);
        }
        let ranges = profiles.iter().map(|p| self.recommend(tag, p)).collect::<Result<Vec<_>, _>>()?;
        if ranges.len() == 1 {
            return Ok(ranges[0]);
        }
        if self.is_additive(tag) {
            // Summed in sorted order so the result does not depend on profile order.
            let sorted_sum = |mut v: Vec<f64>| {
                v.sort_by(f64::total_cmp);
                v.into_iter().sum()
            };
            let lo = sorted_sum(ranges.iter().map(|r| r.lo).collect());
            let hi = sorted_sum(ranges.iter().map(|r| r.hi).collect());
            return Ok(RecommendedRange { lo, hi, compromise: false });
        }
        let max_lo = ranges.iter().map(|r| r.lo).fold(f64::NEG_INFINITY, f64::max);
        let min_hi = ranges.iter().map(|r| r.hi).fold(f64::INFINITY, f64::min);
        Ok(if max_lo <= min_hi {
            RecommendedRange { lo: max_lo, hi: min_hi, compromise: false }
        } else {
            RecommendedRange { lo: min_hi, hi: max_lo, compromise: true }
        })
    }
}

pub fn recommend(tag: ErgonomicTag, profile: &BodyProfile) -> Result<RecommendedRange, ErgonomicsError> {
    CoefficientTable::builtin().recommend(tag, profile)
}

pub fn reconcile(tag: ErgonomicTag, profiles: &[BodyProfile]) -> Result<RecommendedRange, ErgonomicsError> {
    CoefficientTable::builtin().reconcile(tag, profiles)
}

/// Recommended range per ergonomically tagged parameter of `design`. Bands
/// bound with an offset parameter are shifted by its current value.
pub fn recommended_ranges(
    design: &Design,
    config: &Configuration,
    profiles: &[BodyProfile],
) -> Result<BTreeMap<String, RecommendedRange>, ErgonomicsError> {
    let mut out = BTreeMap::new();
    for p in &design.parameters {
        let Some(binding) = &p.ergonomic else { continue };
        let mut r = reconcile(binding.tag, profiles)?;
        if let Some(off) = binding.offset_param.as_deref().and_then(|o| config.number(o)) {
            r.lo += off;
            r.hi += off;
        }
        out.insert(p.name.clone(), r);
    }
    Ok(out)
}
