//! Confidence-stratified multiclass scores.

use serde::{Deserialize, Serialize};

use super::metrics::{macro_f1, mcc};
use super::records::{multiclass_confusion, PredictionSet, RecordError};
use crate::llm::Confidence;

/// Strata smaller than this report only counts.
pub const DEFAULT_MIN_STRATUM: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceStratum {
    pub level: Confidence,
    pub n: usize,
    /// `n` over all scored records.
    pub fraction: f64,
    /// `fraction` as a percentage with two decimals, e.g. `"0.24%"`.
    pub percent: String,
    pub sufficient: bool,
    pub macro_f1: Option<f64>,
    pub mcc: Option<f64>,
}

/// Rounds `100 * n / total` half-up to two decimals using integers only.
pub fn percent_2dp(n: usize, total: usize) -> String {
    if total == 0 {
        return "0.00%".into();
    }
    let (n, total) = (n as u128, total as u128);
    let hundredths = (n * 20_000 + total) / (2 * total);
    format!("{}.{:02}%", hundredths / 100, hundredths % 100)
}

/// Partitions scored (non-failed) records by confidence level.
pub fn stratify_by_confidence(set: &PredictionSet, min_stratum: usize) -> Result<Vec<ConfidenceStratum>, RecordError> {
    let scored: Vec<_> = set.scored().collect();
    if let Some(r) = scored.iter().find(|r| r.confidence.is_none()) {
        return Err(RecordError::NoConfidence(r.key()));
    }
    let total = scored.len();
    Confidence::ALL
        .iter()
        .map(|&level| {
            let subset: Vec<_> = scored.iter().copied().filter(|r| r.confidence == Some(level)).collect();
            let n = subset.len();
            let sufficient = n >= min_stratum && n > 0;
            let (f1, m) = if sufficient {
                let cm = multiclass_confusion(subset.iter().copied())?;
                (Some(macro_f1(&cm)?), Some(mcc(&cm)?))
            } else {
                (None, None)
            };
            Ok(ConfidenceStratum {
                level,
                n,
                fraction: if total == 0 { 0.0 } else { n as f64 / total as f64 },
                percent: percent_2dp(n, total),
                sufficient,
                macro_f1: f1,
                mcc: m,
            })
        })
        .collect()
}
