//! JSON Lines dataset files: one cycle object per line, channels nested as
//! `feature -> side -> [samples]`. Values are written at full precision.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::channel::{ChannelError, ChannelId};
use super::cycle::{validate_dataset, Channels, Dataset, GaitCycle, SubjectId, TIMEPOINTS};
use super::label::ClassLabel;

#[derive(Debug, Error)]
pub enum DatasetIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    Channel {
        line: usize,
        #[source]
        source: ChannelError,
    },
    #[error("line {line}: missing channel {channel}")]
    MissingChannel { line: usize, channel: ChannelId },
    #[error("line {line}: channel {channel} has {len} samples, expected {expected}")]
    WrongLength {
        line: usize,
        channel: ChannelId,
        len: usize,
        expected: usize,
    },
    #[error("dataset failed validation:\n{0}")]
    Invalid(String),
}

/// Wire form of one cycle with arbitrary-length channel arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleRecord {
    pub subject_id: SubjectId,
    pub label: ClassLabel,
    pub cycle_index: u32,
    pub channels: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

impl CycleRecord {
    pub fn from_channels<'a>(
        subject_id: SubjectId,
        label: ClassLabel,
        cycle_index: u32,
        channels: impl IntoIterator<Item = (ChannelId, &'a [f64])>,
    ) -> Self {
        let mut nested: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
        for (id, values) in channels {
            nested
                .entry(id.feature().as_str().to_string())
                .or_default()
                .insert(id.side().as_str().to_string(), values.to_vec());
        }
        CycleRecord {
            subject_id,
            label,
            cycle_index,
            channels: nested,
        }
    }

    pub fn from_cycle(cycle: &GaitCycle) -> Self {
        CycleRecord::from_channels(
            cycle.subject_id.clone(),
            cycle.label,
            cycle.cycle_index,
            cycle.channels.iter().map(|(id, w)| (id, w.as_slice())),
        )
    }

    /// Flattens the nested channel map, rejecting unknown (feature, side) pairs.
    pub fn channel_map(&self) -> Result<BTreeMap<ChannelId, Vec<f64>>, ChannelError> {
        let mut out = BTreeMap::new();
        for (feature, sides) in &self.channels {
            for (side, values) in sides {
                out.insert(ChannelId::parse(feature, side)?, values.clone());
            }
        }
        Ok(out)
    }

    fn into_cycle(self, line: usize) -> Result<GaitCycle, DatasetIoError> {
        let map = self
            .channel_map()
            .map_err(|source| DatasetIoError::Channel { line, source })?;
        let mut waves = Vec::with_capacity(ChannelId::COUNT);
        for id in ChannelId::ALL {
            let values = map
                .get(&id)
                .ok_or(DatasetIoError::MissingChannel { line, channel: id })?;
            let wave: [f64; TIMEPOINTS] = values.as_slice().try_into().map_err(|_| DatasetIoError::WrongLength {
                line,
                channel: id,
                len: values.len(),
                expected: TIMEPOINTS,
            })?;
            waves.push(wave);
        }
        let channels = Channels::new(waves.try_into().expect("13 channels collected"));
        Ok(GaitCycle {
            subject_id: self.subject_id,
            label: self.label,
            cycle_index: self.cycle_index,
            channels,
        })
    }
}

pub fn read_records(reader: impl BufRead) -> Result<Vec<(usize, CycleRecord)>, DatasetIoError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| DatasetIoError::Json { line: i + 1, source })?;
        out.push((i + 1, record));
    }
    Ok(out)
}

/// Reads an 11-point dataset and checks it with [`validate_dataset`].
pub fn read_dataset(reader: impl BufRead) -> Result<Dataset, DatasetIoError> {
    let cycles = read_records(reader)?
        .into_iter()
        .map(|(line, r)| r.into_cycle(line))
        .collect::<Result<Vec<_>, _>>()?;
    let dataset = Dataset::from_cycles(cycles);
    let report = validate_dataset(&dataset);
    if !report.is_valid() {
        return Err(DatasetIoError::Invalid(report.to_string()));
    }
    Ok(dataset)
}

pub fn write_dataset(dataset: &Dataset, mut writer: impl Write) -> Result<(), DatasetIoError> {
    for cycle in dataset.cycles() {
        let line = serde_json::to_string(&CycleRecord::from_cycle(cycle))
            .map_err(|source| DatasetIoError::Json { line: 0, source })?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

pub fn load_dataset(path: &std::path::Path) -> Result<Dataset, DatasetIoError> {
    let file = std::fs::File::open(path)?;
    read_dataset(std::io::BufReader::new(file))
}

pub fn save_dataset(dataset: &Dataset, path: &std::path::Path) -> Result<(), DatasetIoError> {
    let file = std::fs::File::create(path)?;
    let mut writer = std::io::BufWriter::new(file);
    write_dataset(dataset, &mut writer)?;
    writer.flush()?;
    Ok(())
}
