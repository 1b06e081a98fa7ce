use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// The seven movement classes. Declaration order is the canonical order used
/// for tie-breaking and for every table the crate emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassLabel {
    Normal,
    Bouncy,
    Stiff,
    LimbAbduction,
    Crouched,
    InwardFoot,
    OutwardFoot,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown class label `{0}`")]
pub struct UnknownLabel(pub String);

impl ClassLabel {
    pub const ALL: [ClassLabel; 7] = [
        ClassLabel::Normal,
        ClassLabel::Bouncy,
        ClassLabel::Stiff,
        ClassLabel::LimbAbduction,
        ClassLabel::Crouched,
        ClassLabel::InwardFoot,
        ClassLabel::OutwardFoot,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Normal => "NORMAL",
            ClassLabel::Bouncy => "BOUNCY",
            ClassLabel::Stiff => "STIFF",
            ClassLabel::LimbAbduction => "LIMB_ABDUCTION",
            ClassLabel::Crouched => "CROUCHED",
            ClassLabel::InwardFoot => "INWARD_FOOT",
            ClassLabel::OutwardFoot => "OUTWARD_FOOT",
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn is_normal(self) -> bool {
        self == ClassLabel::Normal
    }

    /// Collapse onto the NORMAL / NOT_NORMAL decision space.
    pub fn project_binary(self) -> BinaryLabel {
        if self.is_normal() {
            BinaryLabel::Normal
        } else {
            BinaryLabel::NotNormal
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

impl Serialize for ClassLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ClassLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Binary decision space for the one-class baseline and projected metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinaryLabel {
    Normal,
    NotNormal,
}

impl BinaryLabel {
    pub const ALL: [BinaryLabel; 2] = [BinaryLabel::Normal, BinaryLabel::NotNormal];

    pub const fn as_str(self) -> &'static str {
        match self {
            BinaryLabel::Normal => "NORMAL",
            BinaryLabel::NotNormal => "NOT_NORMAL",
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for BinaryLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for BinaryLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for BinaryLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NORMAL" => Ok(BinaryLabel::Normal),
            "NOT_NORMAL" => Ok(BinaryLabel::NotNormal),
            other => Err(UnknownLabel(other.to_string())),
        }
    }
}
