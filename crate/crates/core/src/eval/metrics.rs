//! Confusion matrices, MCC and macro-F1.

use std::fmt::Display;

use serde::Serialize;
use thiserror::Error;

use crate::domain::{BinaryLabel, ClassLabel};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricError {
    #[error("label {0} is not in the label space")]
    UnknownLabel(String),
    #[error("confusion matrix is empty")]
    Empty,
}

/// Rows are truth, columns are prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix<L> {
    labels: Vec<L>,
    counts: Vec<Vec<u64>>,
}

impl<L: Copy + PartialEq + Display> ConfusionMatrix<L> {
    pub fn new(labels: Vec<L>) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_pairs<I>(labels: Vec<L>, pairs: I) -> Result<Self, MetricError>
    where
        I: IntoIterator<Item = (L, L)>,
    {
        let mut cm = Self::new(labels);
        for (truth, pred) in pairs {
            cm.add(truth, pred)?;
        }
        Ok(cm)
    }

    fn position(&self, label: L) -> Result<usize, MetricError> {
        self.labels
            .iter()
            .position(|l| *l == label)
            .ok_or_else(|| MetricError::UnknownLabel(label.to_string()))
    }

    pub fn add(&mut self, truth: L, pred: L) -> Result<(), MetricError> {
        let r = self.position(truth)?;
        let c = self.position(pred)?;
        self.counts[r][c] += 1;
        Ok(())
    }

    pub fn labels(&self) -> &[L] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: L, pred: L) -> Result<u64, MetricError> {
        Ok(self.counts[self.position(truth)?][self.position(pred)?])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.labels.len())
            .map(|c| self.counts.iter().map(|r| r[c]).sum())
            .collect()
    }

    pub fn diagonal(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    /// CSV with a header row and a leading truth-label column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("truth\\pred");
        for l in &self.labels {
            out.push(',');
            out.push_str(&l.to_string());
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.counts) {
            out.push_str(&l.to_string());
            for c in row {
                out.push(',');
                out.push_str(&c.to_string());
            }
            out.push('\n');
        }
        out
    }
}

impl ConfusionMatrix<ClassLabel> {
    pub fn multiclass() -> Self {
        Self::new(ClassLabel::ALL.to_vec())
    }

    /// Sums the non-NORMAL rows and columns into one NOT_NORMAL cell.
    pub fn collapse_binary(&self) -> ConfusionMatrix<BinaryLabel> {
        let mut out = ConfusionMatrix::binary();
        for (r, truth) in self.labels.iter().enumerate() {
            for (c, pred) in self.labels.iter().enumerate() {
                let rt = binary_index(truth.project_binary());
                let ct = binary_index(pred.project_binary());
                out.counts[rt][ct] += self.counts[r][c];
            }
        }
        out
    }
}

impl ConfusionMatrix<BinaryLabel> {
    pub fn binary() -> Self {
        Self::new(vec![BinaryLabel::Normal, BinaryLabel::NotNormal])
    }
}

fn binary_index(l: BinaryLabel) -> usize {
    match l {
        BinaryLabel::Normal => 0,
        BinaryLabel::NotNormal => 1,
    }
}

/// Generalised (Gorodkin) MCC; 0 when either denominator factor vanishes.
pub fn mcc<L: Copy + PartialEq + Display>(cm: &ConfusionMatrix<L>) -> Result<f64, MetricError> {
    let s = cm.total();
    if s == 0 {
        return Err(MetricError::Empty);
    }
    let s = s as f64;
    let c = cm.diagonal() as f64;
    let p: Vec<f64> = cm.col_sums().into_iter().map(|v| v as f64).collect();
    let t: Vec<f64> = cm.row_sums().into_iter().map(|v| v as f64).collect();
    let pt: f64 = p.iter().zip(&t).map(|(a, b)| a * b).sum();
    let pp: f64 = p.iter().map(|a| a * a).sum();
    let tt: f64 = t.iter().map(|a| a * a).sum();
    let d1 = s * s - pp;
    let d2 = s * s - tt;
    if d1 <= 0.0 || d2 <= 0.0 {
        return Ok(0.0);
    }
    Ok(((c * s - pt) / (d1 * d2).sqrt()).clamp(-1.0, 1.0))
}

/// Unweighted mean of per-class F1 over classes present in truth or prediction.
pub fn macro_f1<L: Copy + PartialEq + Display>(cm: &ConfusionMatrix<L>) -> Result<f64, MetricError> {
    if cm.total() == 0 {
        return Err(MetricError::Empty);
    }
    let rows = cm.row_sums();
    let cols = cm.col_sums();
    let mut sum = 0.0;
    let mut count = 0usize;
    for k in 0..cm.labels.len() {
        if rows[k] == 0 && cols[k] == 0 {
            continue;
        }
        count += 1;
        let tp = cm.counts[k][k] as f64;
        let precision = if cols[k] == 0 { 0.0 } else { tp / cols[k] as f64 };
        let recall = if rows[k] == 0 { 0.0 } else { tp / rows[k] as f64 };
        if precision + recall > 0.0 {
            sum += 2.0 * precision * recall / (precision + recall);
        }
    }
    Ok(sum / count as f64)
}

/// Binary MCC straight from label slices; used by the tuner.
pub fn binary_mcc(truth: &[BinaryLabel], pred: &[BinaryLabel]) -> f64 {
    let cm = ConfusionMatrix::from_pairs(
        vec![BinaryLabel::Normal, BinaryLabel::NotNormal],
        truth.iter().copied().zip(pred.iter().copied()),
    )
    .expect("binary labels are always in the space");
    mcc(&cm).unwrap_or(0.0)
}
