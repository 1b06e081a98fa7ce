//! NORMAL-class reference statistics with one subject held out.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::encode::{leaf, render_hierarchy, round2, timepoint_key, DecodeError};
use crate::domain::{ChannelId, ClassLabel, Dataset, GaitCycle, SubjectId, TIMEPOINTS};

/// Reference subjects required besides the excluded one.
pub const MIN_REFERENCE_SUBJECTS: usize = 2;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ReferenceError {
    #[error("reference needs NORMAL cycles from at least {MIN_REFERENCE_SUBJECTS} subjects other than {excluded}, found {found}")]
    InsufficientSubjects { excluded: SubjectId, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub mean: f64,
    pub sd: f64,
    pub p5: f64,
    pub p95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub excluded_subject: SubjectId,
    pub subjects: Vec<SubjectId>,
    pub n_cycles: usize,
    /// Indexed by channel ordinal, then timepoint.
    cells: Vec<[CellStats; TIMEPOINTS]>,
}

impl ReferenceStats {
    /// Uses every NORMAL cycle not belonging to `excluded`; others are ignored.
    pub fn from_cycles<'a, I>(cycles: I, excluded: &SubjectId) -> Result<Self, ReferenceError>
    where
        I: IntoIterator<Item = &'a GaitCycle>,
    {
        let mut samples: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); TIMEPOINTS]; ChannelId::COUNT];
        let mut subjects = BTreeSet::new();
        let mut n_cycles = 0;
        for c in cycles {
            if c.label != ClassLabel::Normal || &c.subject_id == excluded {
                continue;
            }
            subjects.insert(c.subject_id.clone());
            n_cycles += 1;
            for (ch, w) in c.channels.iter() {
                for (t, v) in w.iter().enumerate() {
                    samples[ch.ordinal()][t].push(*v);
                }
            }
        }
        if subjects.len() < MIN_REFERENCE_SUBJECTS {
            return Err(ReferenceError::InsufficientSubjects {
                excluded: excluded.clone(),
                found: subjects.len(),
            });
        }
        let cells = samples
            .into_iter()
            .map(|per_t| {
                let mut it = per_t.into_iter().map(cell_stats);
                std::array::from_fn(|_| it.next().expect("TIMEPOINTS cells"))
            })
            .collect();
        Ok(ReferenceStats {
            excluded_subject: excluded.clone(),
            subjects: subjects.into_iter().collect(),
            n_cycles,
            cells,
        })
    }

    pub fn cell(&self, channel: ChannelId, timepoint: usize) -> &CellStats {
        &self.cells[channel.ordinal()][timepoint]
    }
}

/// Statistics over all NORMAL cycles of subjects other than `excluded`.
pub fn build_reference_stats(dataset: &Dataset, excluded: &SubjectId) -> Result<ReferenceStats, ReferenceError> {
    ReferenceStats::from_cycles(dataset.cycles(), excluded)
}

fn cell_stats(mut values: Vec<f64>) -> CellStats {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    CellStats {
        mean,
        sd,
        p5: percentile_sorted(&values, 5.0),
        p95: percentile_sorted(&values, 95.0),
    }
}

/// Linear interpolation between order statistics at rank `(n - 1) * q / 100`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let h = (sorted.len() - 1) as f64 * q / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// JSON text mirroring the trial hierarchy with `{mean, sd, p5, p95}` leaves.
pub fn render_reference(stats: &ReferenceStats) -> String {
    render_hierarchy(|ch, out| {
        for t in 0..TIMEPOINTS {
            if t > 0 {
                out.push(',');
            }
            let c = stats.cell(ch, t);
            out.push('"');
            out.push_str(&timepoint_key(t));
            out.push_str("\":{\"mean\":");
            out.push_str(&round2(c.mean));
            out.push_str(",\"sd\":");
            out.push_str(&round2(c.sd));
            out.push_str(",\"p5\":");
            out.push_str(&round2(c.p5));
            out.push_str(",\"p95\":");
            out.push_str(&round2(c.p95));
            out.push('}');
        }
    })
}

/// Per-channel reference means decoded from rendered reference text.
pub fn decode_reference_means(root: &serde_json::Value) -> Result<Vec<f64>, DecodeError> {
    let mut out = Vec::with_capacity(ChannelId::COUNT * TIMEPOINTS);
    for ch in ChannelId::ALL {
        let obj = leaf(root, ch)?;
        for t in 0..TIMEPOINTS {
            let key = timepoint_key(t);
            let v = obj
                .get(&key)
                .and_then(|c| c.get("mean"))
                .ok_or_else(|| DecodeError::Missing(format!("{ch}.{key}.mean")))?;
            out.push(
                v.as_f64()
                    .ok_or_else(|| DecodeError::NotNumber(format!("{ch}.{key}.mean")))?,
            );
        }
    }
    Ok(out)
}
