use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Kinematic feature names as used in every file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    PelvisTilt,
    PelvisObliquity,
    PelvisRotation,
    HipFlexion,
    HipAdduction,
    HipRotation,
    KneeFlexion,
    AnkleDorsiflexion,
}

impl Feature {
    pub const ALL: [Feature; 8] = [
        Feature::PelvisTilt,
        Feature::PelvisObliquity,
        Feature::PelvisRotation,
        Feature::HipFlexion,
        Feature::HipAdduction,
        Feature::HipRotation,
        Feature::KneeFlexion,
        Feature::AnkleDorsiflexion,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            Feature::PelvisTilt => "pelvis_tilt",
            Feature::PelvisObliquity => "pelvis_obliquity",
            Feature::PelvisRotation => "pelvis_rotation",
            Feature::HipFlexion => "hip_flexion",
            Feature::HipAdduction => "hip_adduction",
            Feature::HipRotation => "hip_rotation",
            Feature::KneeFlexion => "knee_flexion",
            Feature::AnkleDorsiflexion => "ankle_dorsiflexion",
        }
    }

    pub const fn is_pelvis(self) -> bool {
        matches!(
            self,
            Feature::PelvisTilt | Feature::PelvisObliquity | Feature::PelvisRotation
        )
    }

    /// Sides this feature is recorded on, in canonical order.
    pub fn sides(self) -> &'static [Side] {
        if self.is_pelvis() {
            &[Side::Center]
        } else {
            &[Side::Left, Side::Right]
        }
    }
}

impl FromStr for Feature {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| ChannelError::UnknownFeature(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
    Center,
}

impl Side {
    pub const fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Center => "center",
        }
    }
}

impl FromStr for Side {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            "center" => Ok(Side::Center),
            other => Err(ChannelError::UnknownSide(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ChannelError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("unknown side `{0}`")]
    UnknownSide(String),
    #[error("feature `{feature}` cannot be recorded on side `{side}`")]
    InvalidSide { feature: &'static str, side: &'static str },
}

/// A (feature, side) pair. Only the 13 valid combinations are constructible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelId {
    feature: Feature,
    side: Side,
}

impl ChannelId {
    pub const COUNT: usize = 13;

    /// Canonical layout order: pelvis channels, then each bilateral feature
    /// left before right.
    pub const ALL: [ChannelId; 13] = [
        ChannelId::raw(Feature::PelvisTilt, Side::Center),
        ChannelId::raw(Feature::PelvisObliquity, Side::Center),
        ChannelId::raw(Feature::PelvisRotation, Side::Center),
        ChannelId::raw(Feature::HipFlexion, Side::Left),
        ChannelId::raw(Feature::HipFlexion, Side::Right),
        ChannelId::raw(Feature::HipAdduction, Side::Left),
        ChannelId::raw(Feature::HipAdduction, Side::Right),
        ChannelId::raw(Feature::HipRotation, Side::Left),
        ChannelId::raw(Feature::HipRotation, Side::Right),
        ChannelId::raw(Feature::KneeFlexion, Side::Left),
        ChannelId::raw(Feature::KneeFlexion, Side::Right),
        ChannelId::raw(Feature::AnkleDorsiflexion, Side::Left),
        ChannelId::raw(Feature::AnkleDorsiflexion, Side::Right),
    ];

    const fn raw(feature: Feature, side: Side) -> Self {
        ChannelId { feature, side }
    }

    pub fn new(feature: Feature, side: Side) -> Result<Self, ChannelError> {
        let valid = match side {
            Side::Center => feature.is_pelvis(),
            Side::Left | Side::Right => !feature.is_pelvis(),
        };
        if valid {
            Ok(ChannelId { feature, side })
        } else {
            Err(ChannelError::InvalidSide {
                feature: feature.as_str(),
                side: side.as_str(),
            })
        }
    }

    pub fn parse(feature: &str, side: &str) -> Result<Self, ChannelError> {
        ChannelId::new(feature.parse()?, side.parse()?)
    }

    pub const fn feature(self) -> Feature {
        self.feature
    }

    pub const fn side(self) -> Side {
        self.side
    }

    /// Position in [`ChannelId::ALL`].
    pub fn ordinal(self) -> usize {
        ChannelId::ALL
            .iter()
            .position(|c| *c == self)
            .expect("every constructible channel is in ALL")
    }

    /// The same feature on the other limb; pelvis channels map to themselves.
    pub fn contralateral(self) -> ChannelId {
        let side = match self.side {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::Center => Side::Center,
        };
        ChannelId { side, ..self }
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.feature.as_str(), self.side.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_thirteen_valid_channels() {
        let sides = [Side::Left, Side::Right, Side::Center];
        let valid: Vec<_> = Feature::ALL
            .iter()
            .flat_map(|f| sides.iter().filter_map(move |s| ChannelId::new(*f, *s).ok()))
            .collect();
        assert_eq!(valid.len(), 13);
        assert_eq!(valid, ChannelId::ALL.to_vec());
    }

    #[test]
    fn pelvis_only_center() {
        assert!(ChannelId::parse("pelvis_tilt", "left").is_err());
        assert!(ChannelId::parse("knee_flexion", "center").is_err());
        assert!(ChannelId::parse("knee_flexion", "right").is_ok());
        assert_eq!(
            ChannelId::parse("knee", "right"),
            Err(ChannelError::UnknownFeature("knee".into()))
        );
    }

    #[test]
    fn ordinals_follow_canonical_order() {
        for (i, c) in ChannelId::ALL.iter().enumerate() {
            assert_eq!(c.ordinal(), i);
        }
        let knee_r = ChannelId::parse("knee_flexion", "right").unwrap();
        assert_eq!(knee_r.contralateral().side(), Side::Left);
    }
}
