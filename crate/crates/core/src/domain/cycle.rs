use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::channel::ChannelId;
use super::label::ClassLabel;

/// Number of resampled points per channel (0%, 10%, ..., 100%).
pub const TIMEPOINTS: usize = 11;

/// One channel after time normalization, in degrees.
pub type Waveform = [f64; TIMEPOINTS];

/// Gait-cycle percentage of each waveform sample.
pub const TIMEPOINT_PERCENT: [u32; TIMEPOINTS] = [0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubjectId(String);

impl SubjectId {
    pub fn new(id: impl Into<String>) -> Self {
        SubjectId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SubjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SubjectId {
    fn from(s: &str) -> Self {
        SubjectId(s.to_string())
    }
}

/// All 13 channel waveforms of a cycle, stored in canonical channel order.
#[derive(Debug, Clone, PartialEq)]
pub struct Channels([Waveform; ChannelId::COUNT]);

impl Channels {
    pub fn new(waveforms: [Waveform; ChannelId::COUNT]) -> Self {
        Channels(waveforms)
    }

    pub fn from_fn(mut f: impl FnMut(ChannelId) -> Waveform) -> Self {
        Channels(std::array::from_fn(|i| f(ChannelId::ALL[i])))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ChannelId, &Waveform)> {
        ChannelId::ALL.into_iter().zip(self.0.iter())
    }

    pub fn as_array(&self) -> &[Waveform; ChannelId::COUNT] {
        &self.0
    }
}

impl Index<ChannelId> for Channels {
    type Output = Waveform;

    fn index(&self, id: ChannelId) -> &Waveform {
        &self.0[id.ordinal()]
    }
}

impl IndexMut<ChannelId> for Channels {
    fn index_mut(&mut self, id: ChannelId) -> &mut Waveform {
        &mut self.0[id.ordinal()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CycleKey {
    pub subject_id: SubjectId,
    pub label: ClassLabel,
    pub cycle_index: u32,
}

impl fmt::Display for CycleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.subject_id, self.label, self.cycle_index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaitCycle {
    pub subject_id: SubjectId,
    pub label: ClassLabel,
    pub cycle_index: u32,
    pub channels: Channels,
}

impl GaitCycle {
    pub fn key(&self) -> CycleKey {
        CycleKey {
            subject_id: self.subject_id.clone(),
            label: self.label,
            cycle_index: self.cycle_index,
        }
    }

    pub fn channel(&self, id: ChannelId) -> &Waveform {
        &self.channels[id]
    }
}

/// Immutable collection of labeled cycles.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    cycles: Vec<GaitCycle>,
}

impl Dataset {
    /// Wraps cycles as-is; call [`validate_dataset`] to check invariants.
    pub fn from_cycles(cycles: Vec<GaitCycle>) -> Self {
        Dataset { cycles }
    }

    pub fn cycles(&self) -> &[GaitCycle] {
        &self.cycles
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn subjects(&self) -> BTreeSet<SubjectId> {
        self.cycles.iter().map(|c| c.subject_id.clone()).collect()
    }

    pub fn cycles_of<'a>(&'a self, subject: &'a SubjectId) -> impl Iterator<Item = &'a GaitCycle> {
        self.cycles.iter().filter(move |c| &c.subject_id == subject)
    }

    pub fn into_cycles(self) -> Vec<GaitCycle> {
        self.cycles
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite {
        key: CycleKey,
        channel: ChannelId,
        timepoint: u32,
        value: f64,
    },
    DuplicateKey {
        key: CycleKey,
        first: usize,
        second: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite {
                key,
                channel,
                timepoint,
                value,
            } => write!(f, "{key}: {channel} t{timepoint} is not finite ({value})"),
            Violation::DuplicateKey { key, first, second } => {
                write!(f, "{key}: duplicate key at cycles {first} and {second}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every invariant violation. Channel completeness is structural
/// (see [`Channels`]) so only finiteness and key uniqueness are checked here.
pub fn validate_dataset(d: &Dataset) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen: BTreeMap<CycleKey, usize> = BTreeMap::new();
    for (i, cycle) in d.cycles.iter().enumerate() {
        for (channel, wave) in cycle.channels.iter() {
            for (t, &value) in wave.iter().enumerate() {
                if !value.is_finite() {
                    violations.push(Violation::NonFinite {
                        key: cycle.key(),
                        channel,
                        timepoint: TIMEPOINT_PERCENT[t],
                        value,
                    });
                }
            }
        }
        if let Some(&first) = seen.get(&cycle.key()) {
            violations.push(Violation::DuplicateKey {
                key: cycle.key(),
                first,
                second: i,
            });
        } else {
            seen.insert(cycle.key(), i);
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::generator::{generate_dataset, GeneratorConfig};

    fn small() -> Dataset {
        generate_dataset(&GeneratorConfig {
            n_subjects: 2,
            cycles_per_class: 1,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn generated_dataset_is_valid() {
        assert!(validate_dataset(&small()).is_valid());
    }

    #[test]
    fn reports_injected_nan_location() {
        let mut cycles = small().into_cycles();
        let knee = ChannelId::parse("knee_flexion", "right").unwrap();
        cycles[3].channels[knee][5] = f64::NAN;
        let report = validate_dataset(&Dataset::from_cycles(cycles.clone()));
        assert_eq!(report.violations.len(), 1);
        match &report.violations[0] {
            Violation::NonFinite {
                key,
                channel,
                timepoint,
                ..
            } => {
                assert_eq!(key, &cycles[3].key());
                assert_eq!(*channel, knee);
                assert_eq!(*timepoint, 50);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn reports_duplicate_keys() {
        let mut cycles = small().into_cycles();
        cycles.push(cycles[0].clone());
        let report = validate_dataset(&Dataset::from_cycles(cycles));
        assert_eq!(
            report.violations,
            vec![Violation::DuplicateKey {
                key: small().cycles()[0].key(),
                first: 0,
                second: 14,
            }]
        );
    }
}
