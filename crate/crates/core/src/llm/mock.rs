//! Offline nearest-centroid stand-in for a chat model.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::backend::{ChatBackend, TransportError};
use super::encode::decode_channels_value;
use super::prompt::sha256_hex;
use super::reference::decode_reference_means;
use crate::classic::squared_euclidean;
use crate::domain::ClassLabel;
use crate::preprocess::vectorize_channels;

pub const TRIAL_MARKER: &str = "TRIAL DATA (% Gait Cycle): ";
pub const REFERENCE_MARKER: &str = "REFERENCE STATS: ";
pub const MOCK_MODEL_ID: &str = "mock-nearest-centroid";

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CentroidError {
    #[error("no training vectors")]
    Empty,
    #[error("vectors differ in length")]
    Ragged,
}

/// Mean training vector per class present in the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidTable {
    centroids: BTreeMap<ClassLabel, Vec<f64>>,
}

impl CentroidTable {
    pub fn fit<V: AsRef<[f64]>>(samples: &[(ClassLabel, V)]) -> Result<Self, CentroidError> {
        let dim = samples.first().ok_or(CentroidError::Empty)?.1.as_ref().len();
        let mut sums: BTreeMap<ClassLabel, (Vec<f64>, usize)> = BTreeMap::new();
        for (label, v) in samples {
            let v = v.as_ref();
            if v.len() != dim {
                return Err(CentroidError::Ragged);
            }
            let e = sums.entry(*label).or_insert_with(|| (vec![0.0; dim], 0));
            for (s, x) in e.0.iter_mut().zip(v) {
                *s += x;
            }
            e.1 += 1;
        }
        Ok(CentroidTable {
            centroids: sums
                .into_iter()
                .map(|(l, (s, n))| (l, s.into_iter().map(|x| x / n as f64).collect()))
                .collect(),
        })
    }

    pub fn get(&self, label: ClassLabel) -> Option<&[f64]> {
        self.centroids.get(&label).map(Vec::as_slice)
    }

    pub fn with_centroid(mut self, label: ClassLabel, centroid: Vec<f64>) -> Self {
        self.centroids.insert(label, centroid);
        self
    }

    /// Classes sorted by (distance, label).
    pub fn ranked(&self, x: &[f64]) -> Vec<(ClassLabel, f64)> {
        let mut d: Vec<(ClassLabel, f64)> = self
            .centroids
            .iter()
            .map(|(l, c)| (*l, squared_euclidean(c, x).sqrt()))
            .collect();
        d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        d
    }

    pub fn classify(&self, x: &[f64]) -> ClassLabel {
        self.ranked(x)[0].0
    }
}

/// `high` below 0.8, `low` above 0.95, else `medium`.
pub fn confidence_from_ratio(ratio: f64) -> &'static str {
    if ratio < 0.8 {
        "high"
    } else if ratio > 0.95 {
        "low"
    } else {
        "medium"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum FaultMode {
    None,
    /// Every reply cut in half.
    Truncate,
    /// Every reply carries a descriptive class string.
    BadClass,
    /// Prompts whose hash is divisible by `n` always get a truncated reply,
    /// so their resubmissions fail too.
    EveryNth {
        n: u64,
    },
    /// The first `k` calls for each prompt get a truncated reply.
    FlakyFirst {
        k: u32,
    },
}

pub struct MockBackend {
    centroids: CentroidTable,
    fault: FaultMode,
    calls: Mutex<HashMap<String, u32>>,
}

impl MockBackend {
    pub fn new(centroids: CentroidTable) -> Self {
        Self::with_fault(centroids, FaultMode::None)
    }

    pub fn with_fault(centroids: CentroidTable, fault: FaultMode) -> Self {
        MockBackend {
            centroids,
            fault,
            calls: Mutex::new(HashMap::new()),
        }
    }

    fn reply(&self, prompt: &str) -> Result<String, TransportError> {
        let trial = extract_json(prompt, TRIAL_MARKER)
            .ok_or_else(|| TransportError::Terminal("prompt has no decodable TRIAL DATA".into()))?;
        let channels = decode_channels_value(&trial)
            .map_err(|e| TransportError::Terminal(format!("undecodable TRIAL DATA: {e}")))?;
        let x = vectorize_channels(&channels);

        let table = match extract_json(prompt, REFERENCE_MARKER) {
            Some(reference) => {
                let means = decode_reference_means(&reference)
                    .map_err(|e| TransportError::Terminal(format!("undecodable REFERENCE STATS: {e}")))?;
                self.centroids.clone().with_centroid(ClassLabel::Normal, means)
            }
            None => self.centroids.clone(),
        };
        let ranked = table.ranked(&x);
        let (best, d1) = ranked[0];
        let (second, d2) = ranked.get(1).copied().unwrap_or((best, d1));
        let ratio = if d2 > 0.0 { d1 / d2 } else { 1.0 };
        let body = serde_json::json!({
            "class": best.as_str(),
            "confidence": confidence_from_ratio(ratio),
            "justification": format!(
                "Nearest class centroid is {best} (distance {d1:.2}); runner-up is {second} (distance {d2:.2})."
            ),
        });
        Ok(body.to_string())
    }
}

fn truncate(s: &str) -> String {
    s.chars().take(s.chars().count() / 2).collect()
}

/// Parses the JSON value following the last occurrence of `marker`.
pub fn extract_json(prompt: &str, marker: &str) -> Option<Value> {
    let start = prompt.rfind(marker)? + marker.len();
    let mut stream = serde_json::Deserializer::from_str(&prompt[start..]).into_iter::<Value>();
    match stream.next() {
        Some(Ok(v)) if v.is_object() => Some(v),
        _ => None,
    }
}

impl ChatBackend for MockBackend {
    fn model_id(&self) -> &str {
        MOCK_MODEL_ID
    }

    fn complete(&self, prompt: &str) -> Result<String, TransportError> {
        let hash = sha256_hex(prompt);
        let call = {
            let mut calls = self.calls.lock().expect("mock call log");
            let c = calls.entry(hash.clone()).or_insert(0);
            *c += 1;
            *c
        };
        let good = self.reply(prompt)?;
        Ok(match self.fault {
            FaultMode::None => good,
            FaultMode::Truncate => truncate(&good),
            FaultMode::BadClass => {
                let mut v: Value = serde_json::from_str(&good).expect("mock reply is JSON");
                let class = format!("{}, because of the knee", v["class"].as_str().unwrap_or(""));
                v["class"] = Value::String(class);
                v.to_string()
            }
            FaultMode::EveryNth { n } => {
                let h = u64::from_str_radix(&hash[..15], 16).expect("hex digest");
                if n > 0 && h % n == 0 {
                    truncate(&good)
                } else {
                    good
                }
            }
            FaultMode::FlakyFirst { k } => {
                if call <= k {
                    truncate(&good)
                } else {
                    good
                }
            }
        })
    }
}
