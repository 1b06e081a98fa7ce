//! Results bundle: the directory an experiment run writes.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::experiments::{Diagnostics, FoldTuning};
use super::metrics::{macro_f1, mcc, MetricError};
use super::records::{ExperimentMeta, PredictionSet, RecordError};
use super::stratify::{stratify_by_confidence, ConfidenceStratum};
use crate::llm::{write_verdict_log, VerdictLogRecord};

pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const METRICS_FILE: &str = "metrics.json";
pub const CONFUSION_MULTICLASS_FILE: &str = "confusion_multiclass.csv";
pub const CONFUSION_BINARY_FILE: &str = "confusion_binary.csv";
pub const TUNING_FILE: &str = "tuning.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const VERDICTS_FILE: &str = "verdicts.jsonl";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BundleError + '_ {
    move |source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub mcc: f64,
    pub macro_f1: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub meta: ExperimentMeta,
    pub n_records: usize,
    pub n_failed: usize,
    /// Absent for binary-only classifiers.
    pub multiclass: Option<Score>,
    pub binary: Score,
    /// Present only when every scored record carries a confidence rating.
    pub confidence: Option<Vec<ConfidenceStratum>>,
}

pub fn metrics_report(set: &PredictionSet, min_stratum: usize) -> Result<MetricsReport, BundleError> {
    let multiclass = if set.has_multiclass() {
        let cm = set.multiclass_confusion()?;
        Some(Score {
            mcc: mcc(&cm)?,
            macro_f1: macro_f1(&cm)?,
            n: cm.total() as usize,
        })
    } else {
        None
    };
    let cm = set.binary_confusion()?;
    let binary = Score {
        mcc: mcc(&cm)?,
        macro_f1: macro_f1(&cm)?,
        n: cm.total() as usize,
    };
    let confidence = if multiclass.is_some() && set.scored().all(|r| r.confidence.is_some()) {
        Some(stratify_by_confidence(set, min_stratum)?)
    } else {
        None
    };
    Ok(MetricsReport {
        meta: set.meta.clone(),
        n_records: set.len(),
        n_failed: set.failures().count(),
        multiclass,
        binary,
        confidence,
    })
}

#[derive(Debug, Clone)]
pub struct ResultsBundle {
    pub predictions: PredictionSet,
    pub tuning: Option<Vec<FoldTuning>>,
    pub diagnostics: Diagnostics,
    pub verdicts: Option<Vec<VerdictLogRecord>>,
    pub min_stratum: usize,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BundleError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| BundleError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

impl ResultsBundle {
    pub fn metrics(&self) -> Result<MetricsReport, BundleError> {
        metrics_report(&self.predictions, self.min_stratum)
    }

    /// Creates `dir` if needed and writes every bundle file.
    pub fn write(&self, dir: &Path) -> Result<MetricsReport, BundleError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let report = self.metrics()?;

        let p = dir.join(PREDICTIONS_FILE);
        let mut w = BufWriter::new(File::create(&p).map_err(io_err(&p))?);
        self.predictions.write_jsonl(&mut w).map_err(io_err(&p))?;
        w.flush().map_err(io_err(&p))?;

        write_json(&dir.join(METRICS_FILE), &report)?;

        if self.predictions.has_multiclass() {
            let p = dir.join(CONFUSION_MULTICLASS_FILE);
            fs::write(&p, self.predictions.multiclass_confusion()?.to_csv()).map_err(io_err(&p))?;
        }
        let p = dir.join(CONFUSION_BINARY_FILE);
        fs::write(&p, self.predictions.binary_confusion()?.to_csv()).map_err(io_err(&p))?;

        if let Some(t) = &self.tuning {
            write_json(&dir.join(TUNING_FILE), t)?;
        }
        write_json(&dir.join(DIAGNOSTICS_FILE), &self.diagnostics)?;
        if let Some(v) = &self.verdicts {
            let p = dir.join(VERDICTS_FILE);
            let w = BufWriter::new(File::create(&p).map_err(io_err(&p))?);
            write_verdict_log(w, v).map_err(io_err(&p))?;
        }
        Ok(report)
    }
}

/// Reads `metrics.json`; errors name the file and the offending field.
pub fn read_metrics(dir: &Path) -> Result<MetricsReport, BundleError> {
    let path = dir.join(METRICS_FILE);
    let f = File::open(&path).map_err(io_err(&path))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| BundleError::Parse {
        path,
        message: e.to_string(),
    })
}

pub fn read_predictions(dir: &Path) -> Result<Vec<super::records::PredictionRecord>, BundleError> {
    let path = dir.join(PREDICTIONS_FILE);
    let f = File::open(&path).map_err(io_err(&path))?;
    super::records::read_records_jsonl(BufReader::new(f)).map_err(|(line, message)| BundleError::Parse {
        path,
        message: format!("line {line}: {message}"),
    })
}
