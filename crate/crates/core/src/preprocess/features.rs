use std::collections::BTreeMap;
use std::ops::Deref;

use thiserror::Error;

use super::spline::{spline_resample, SplineError};
use crate::domain::io::CycleRecord;
use crate::domain::{ChannelError, ChannelId, Channels, ClassLabel, GaitCycle, SubjectId, TIMEPOINTS};

/// Length of the wide-format vector: 13 channels x 11 timepoints.
pub const FEATURE_DIM: usize = ChannelId::COUNT * TIMEPOINTS;

/// Channel-major layout: `ChannelId::ALL` order, 11 timepoints each.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

#[derive(Debug, Clone, Error, PartialEq)]
#[error("feature vector must have {FEATURE_DIM} values, got {0}")]
pub struct WrongDimension(pub usize);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self, WrongDimension> {
        if values.len() == FEATURE_DIM {
            Ok(FeatureVector(values))
        } else {
            Err(WrongDimension(values.len()))
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Index of (channel, timepoint) within a [`FeatureVector`].
pub fn feature_index(channel: ChannelId, timepoint: usize) -> usize {
    channel.ordinal() * TIMEPOINTS + timepoint
}

pub fn vectorize(cycle: &GaitCycle) -> FeatureVector {
    vectorize_channels(&cycle.channels)
}

pub fn vectorize_channels(channels: &Channels) -> FeatureVector {
    FeatureVector(channels.as_array().iter().flatten().copied().collect())
}

/// Inverse of [`vectorize_channels`].
pub fn devectorize(v: &FeatureVector) -> Channels {
    Channels::from_fn(|id| {
        let start = feature_index(id, 0);
        v.0[start..start + TIMEPOINTS].try_into().expect("11 values")
    })
}

/// A segmented cycle before time normalization: uniformly sampled channels
/// of any common length >= 4.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCycle {
    pub subject_id: SubjectId,
    pub label: ClassLabel,
    pub cycle_index: u32,
    pub channels: BTreeMap<ChannelId, Vec<f64>>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NormalizeError {
    #[error("raw cycle is missing channel {0}")]
    MissingChannel(ChannelId),
    #[error("channel {channel} has {len} samples but {expected} were expected")]
    UnequalLength {
        channel: ChannelId,
        len: usize,
        expected: usize,
    },
    #[error("channel {channel}: {source}")]
    Spline {
        channel: ChannelId,
        #[source]
        source: SplineError,
    },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

impl RawCycle {
    pub fn from_record(record: &CycleRecord) -> Result<Self, NormalizeError> {
        Ok(RawCycle {
            subject_id: record.subject_id.clone(),
            label: record.label,
            cycle_index: record.cycle_index,
            channels: record.channel_map()?,
        })
    }
}

/// Resamples each channel of a raw cycle onto the 11-point grid.
pub fn time_normalize(raw: &RawCycle) -> Result<GaitCycle, NormalizeError> {
    let mut expected = None;
    let mut waves = Vec::with_capacity(ChannelId::COUNT);
    for id in ChannelId::ALL {
        let samples = raw.channels.get(&id).ok_or(NormalizeError::MissingChannel(id))?;
        let expected = *expected.get_or_insert(samples.len());
        if samples.len() != expected {
            return Err(NormalizeError::UnequalLength {
                channel: id,
                len: samples.len(),
                expected,
            });
        }
        waves.push(spline_resample(samples).map_err(|source| NormalizeError::Spline { channel: id, source })?);
    }
    Ok(GaitCycle {
        subject_id: raw.subject_id.clone(),
        label: raw.label,
        cycle_index: raw.cycle_index,
        channels: Channels::new(waves.try_into().expect("13 channels")),
    })
}
