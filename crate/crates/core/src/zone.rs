//! Gaze zones.
//!
//! Nine canonical in-cabin regions plus the [`GazeZone::Unknown`] sentinel used
//! by annotators for frames between zones. The sentinel never has a descriptor
//! entry: every per-zone vector in this crate is indexed by
//! [`GazeZone::index`], which is `None` for `Unknown`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Number of canonical zones.
pub const ZONE_COUNT: usize = 9;

/// A per-zone real vector in canonical zone order.
pub type ZoneVector = [f64; ZONE_COUNT];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GazeZone {
    Front,
    Right,
    Left,
    CenterStack,
    Rearview,
    Speedometer,
    LeftShoulder,
    RightWindshield,
    EyesClosed,
    Unknown,
}

const CANONICAL: [GazeZone; ZONE_COUNT] = [
    GazeZone::Front,
    GazeZone::Right,
    GazeZone::Left,
    GazeZone::CenterStack,
    GazeZone::Rearview,
    GazeZone::Speedometer,
    GazeZone::LeftShoulder,
    GazeZone::RightWindshield,
    GazeZone::EyesClosed,
];

/// The nine canonical zones in index order. `Front` is index 0.
pub fn canonical_zone_order() -> &'static [GazeZone; ZONE_COUNT] {
    &CANONICAL
}

impl GazeZone {
    /// Every label a frame can carry: the canonical zones followed by `Unknown`.
    pub const ALL_LABELS: [GazeZone; ZONE_COUNT + 1] = [
        GazeZone::Front,
        GazeZone::Right,
        GazeZone::Left,
        GazeZone::CenterStack,
        GazeZone::Rearview,
        GazeZone::Speedometer,
        GazeZone::LeftShoulder,
        GazeZone::RightWindshield,
        GazeZone::EyesClosed,
        GazeZone::Unknown,
    ];

    /// Canonical index in `0..9`, `None` for `Unknown`.
    pub fn index(self) -> Option<usize> {
        match self {
            GazeZone::Unknown => None,
            z => Some(z as usize),
        }
    }

    /// Index into a 10-slot table where `Unknown` occupies slot 9.
    pub fn label_index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<GazeZone> {
        CANONICAL.get(index).copied()
    }

    pub fn from_label_index(index: usize) -> Option<GazeZone> {
        Self::ALL_LABELS.get(index).copied()
    }

    pub fn is_unknown(self) -> bool {
        self == GazeZone::Unknown
    }

    pub fn name(self) -> &'static str {
        match self {
            GazeZone::Front => "Front",
            GazeZone::Right => "Right",
            GazeZone::Left => "Left",
            GazeZone::CenterStack => "CenterStack",
            GazeZone::Rearview => "Rearview",
            GazeZone::Speedometer => "Speedometer",
            GazeZone::LeftShoulder => "LeftShoulder",
            GazeZone::RightWindshield => "RightWindshield",
            GazeZone::EyesClosed => "EyesClosed",
            GazeZone::Unknown => "Unknown",
        }
    }
}

/// Parses a zone label, ignoring case, whitespace, underscores and hyphens.
/// "Front right windshield" is accepted as an alias of `RightWindshield`.
pub fn parse_zone_label(text: &str) -> Result<GazeZone> {
    let key: String = text
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
        .flat_map(char::to_lowercase)
        .collect();
    if key == "frontrightwindshield" {
        return Ok(GazeZone::RightWindshield);
    }
    GazeZone::ALL_LABELS
        .iter()
        .copied()
        .find(|z| z.name().to_ascii_lowercase() == key)
        .ok_or_else(|| Error::UnknownZoneLabel(text.to_string()))
}

impl FromStr for GazeZone {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_zone_label(s)
    }
}

impl fmt::Display for GazeZone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for GazeZone {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for GazeZone {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        parse_zone_label(&s).map_err(serde::de::Error::custom)
    }
}
