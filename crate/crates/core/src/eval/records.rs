//! Out-of-fold prediction records.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::loso::FoldPlan;
use super::metrics::{ConfusionMatrix, MetricError};
use crate::domain::{BinaryLabel, ClassLabel, CycleKey, Dataset, SubjectId};
use crate::llm::Confidence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub subject_id: SubjectId,
    pub label: ClassLabel,
    pub cycle_index: u32,
    pub fold: usize,
    /// Multiclass prediction; absent for binary-only classifiers and failures.
    pub predicted: Option<ClassLabel>,
    pub predicted_binary: Option<BinaryLabel>,
    pub confidence: Option<Confidence>,
    pub justification: Option<String>,
    pub attempts: Option<u32>,
    /// Failure kind for records that produced no prediction.
    pub error: Option<String>,
}

impl PredictionRecord {
    pub fn new(key: &CycleKey, fold: usize) -> Self {
        PredictionRecord {
            subject_id: key.subject_id.clone(),
            label: key.label,
            cycle_index: key.cycle_index,
            fold,
            predicted: None,
            predicted_binary: None,
            confidence: None,
            justification: None,
            attempts: None,
            error: None,
        }
    }

    pub fn with_class(mut self, predicted: ClassLabel) -> Self {
        self.predicted = Some(predicted);
        self.predicted_binary = Some(predicted.project_binary());
        self
    }

    pub fn with_binary(mut self, predicted: BinaryLabel) -> Self {
        self.predicted_binary = Some(predicted);
        self
    }

    pub fn key(&self) -> CycleKey {
        CycleKey {
            subject_id: self.subject_id.clone(),
            label: self.label,
            cycle_index: self.cycle_index,
        }
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMeta {
    pub classifier: String,
    pub grounded: bool,
    pub config_hash: String,
    pub fold_plan_hash: String,
    pub model_id: Option<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RecordError {
    #[error("cycle {0:?} has no prediction record")]
    Missing(CycleKey),
    #[error("cycle {0:?} has more than one prediction record")]
    Duplicate(CycleKey),
    #[error("record {0:?} is not in the dataset")]
    Unknown(CycleKey),
    #[error("record {key:?} is in fold {found}, its subject belongs to fold {expected}")]
    WrongFold {
        key: CycleKey,
        expected: usize,
        found: usize,
    },
    #[error("record {0:?} lacks a multiclass prediction")]
    NoMulticlass(CycleKey),
    #[error("record {0:?} lacks a confidence rating")]
    NoConfidence(CycleKey),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub meta: ExperimentMeta,
    records: Vec<PredictionRecord>,
}

impl PredictionSet {
    /// Sorts records into (subject, label, cycle) order.
    pub fn new(meta: ExperimentMeta, mut records: Vec<PredictionRecord>) -> Self {
        records.sort_by_key(PredictionRecord::key);
        PredictionSet { meta, records }
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn scored(&self) -> impl Iterator<Item = &PredictionRecord> {
        self.records.iter().filter(|r| !r.failed())
    }

    pub fn failures(&self) -> impl Iterator<Item = &PredictionRecord> {
        self.records.iter().filter(|r| r.failed())
    }

    pub fn has_multiclass(&self) -> bool {
        self.scored().any(|r| r.predicted.is_some())
    }

    /// One record per dataset cycle, each in its subject's fold.
    pub fn check_against(&self, dataset: &Dataset, plan: &FoldPlan) -> Result<(), RecordError> {
        let expected: std::collections::BTreeSet<CycleKey> = dataset.cycles().iter().map(|c| c.key()).collect();
        let mut seen = std::collections::BTreeSet::new();
        for r in &self.records {
            let key = r.key();
            if !expected.contains(&key) {
                return Err(RecordError::Unknown(key));
            }
            if !seen.insert(key.clone()) {
                return Err(RecordError::Duplicate(key));
            }
            let fold = plan
                .fold_of(&r.subject_id)
                .ok_or_else(|| RecordError::Unknown(key.clone()))?;
            if fold != r.fold {
                return Err(RecordError::WrongFold {
                    key,
                    expected: fold,
                    found: r.fold,
                });
            }
        }
        if let Some(missing) = expected.difference(&seen).next() {
            return Err(RecordError::Missing(missing.clone()));
        }
        Ok(())
    }

    pub fn multiclass_confusion(&self) -> Result<ConfusionMatrix<ClassLabel>, RecordError> {
        multiclass_confusion(self.scored())
    }

    pub fn binary_confusion(&self) -> Result<ConfusionMatrix<BinaryLabel>, RecordError> {
        let mut cm = ConfusionMatrix::<BinaryLabel>::binary();
        for r in self.scored() {
            let pred = r
                .predicted_binary
                .or(r.predicted.map(ClassLabel::project_binary))
                .ok_or_else(|| RecordError::NoMulticlass(r.key()))?;
            cm.add(r.label.project_binary(), pred)?;
        }
        Ok(cm)
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn multiclass_confusion<'a>(
    records: impl IntoIterator<Item = &'a PredictionRecord>,
) -> Result<ConfusionMatrix<ClassLabel>, RecordError> {
    let mut cm = ConfusionMatrix::<ClassLabel>::multiclass();
    for r in records {
        let pred = r.predicted.ok_or_else(|| RecordError::NoMulticlass(r.key()))?;
        cm.add(r.label, pred)?;
    }
    Ok(cm)
}

pub fn read_records_jsonl(r: impl BufRead) -> Result<Vec<PredictionRecord>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| (i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| (i + 1, e.to_string()))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{generate_dataset, GeneratorConfig};
    use crate::eval::loso::loso_split;

    fn meta() -> ExperimentMeta {
        ExperimentMeta {
            classifier: "test".into(),
            grounded: false,
            config_hash: String::new(),
            fold_plan_hash: String::new(),
            model_id: None,
            seed: 0,
        }
    }

    fn fixture() -> (Dataset, FoldPlan, Vec<PredictionRecord>) {
        let ds = generate_dataset(&GeneratorConfig {
            n_subjects: 3,
            cycles_per_class: 1,
            ..Default::default()
        })
        .unwrap();
        let plan = loso_split(&ds).unwrap();
        let recs = ds
            .cycles()
            .iter()
            .map(|c| PredictionRecord::new(&c.key(), plan.fold_of(&c.subject_id).unwrap()).with_class(c.label))
            .collect();
        (ds, plan, recs)
    }

    #[test]
    fn complete_set_checks_out() {
        let (ds, plan, mut recs) = fixture();
        recs.reverse();
        let set = PredictionSet::new(meta(), recs);
        set.check_against(&ds, &plan).unwrap();
        assert_eq!(
            set.records()[0].key(),
            ds.cycles().iter().map(|c| c.key()).min().unwrap()
        );
        let cm = set.multiclass_confusion().unwrap();
        assert_eq!(cm.total(), 21);
        assert_eq!(cm.diagonal(), 21);
    }

    #[test]
    fn bookkeeping_violations() {
        let (ds, plan, recs) = fixture();
        let mut short = recs.clone();
        short.pop();
        assert!(matches!(
            PredictionSet::new(meta(), short).check_against(&ds, &plan),
            Err(RecordError::Missing(_))
        ));
        let mut dup = recs.clone();
        dup.push(recs[0].clone());
        assert!(matches!(
            PredictionSet::new(meta(), dup).check_against(&ds, &plan),
            Err(RecordError::Duplicate(_))
        ));
        let mut wrong = recs;
        wrong[0].fold += 1;
        assert!(matches!(
            PredictionSet::new(meta(), wrong).check_against(&ds, &plan),
            Err(RecordError::WrongFold { .. })
        ));
    }

    #[test]
    fn failed_records_are_not_scored() {
        let (_, _, mut recs) = fixture();
        recs[0].predicted = None;
        recs[0].predicted_binary = None;
        recs[0].error = Some("not-json".into());
        let set = PredictionSet::new(meta(), recs);
        assert_eq!(set.len(), 21);
        assert_eq!(set.failures().count(), 1);
        assert_eq!(set.multiclass_confusion().unwrap().total(), 20);
        assert_eq!(set.binary_confusion().unwrap().total(), 20);
    }

    #[test]
    fn jsonl_round_trip() {
        let (_, _, recs) = fixture();
        let set = PredictionSet::new(meta(), recs);
        let mut buf = Vec::new();
        set.write_jsonl(&mut buf).unwrap();
        let back = read_records_jsonl(&buf[..]).unwrap();
        assert_eq!(back, set.records());
    }
}
