//! Leave-one-subject-out fold plans and an access-logging dataset view.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Dataset, GaitCycle, SubjectId};
use crate::llm::sha256_hex;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FoldError {
    #[error("leave-one-subject-out needs at least 2 subjects, found {0}")]
    TooFewSubjects(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub id: usize,
    pub test_subject: SubjectId,
    pub train_subjects: Vec<SubjectId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    folds: Vec<Fold>,
}

impl FoldPlan {
    pub fn folds(&self) -> &[Fold] {
        &self.folds
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn fold_of(&self, subject: &SubjectId) -> Option<usize> {
        self.folds.iter().position(|f| &f.test_subject == subject)
    }

    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_string(&self.folds).expect("fold plan serializes"))
    }
}

/// One fold per subject, ordered by subject id.
pub fn loso_split(dataset: &Dataset) -> Result<FoldPlan, FoldError> {
    let subjects: Vec<SubjectId> = dataset.subjects().into_iter().collect();
    if subjects.len() < 2 {
        return Err(FoldError::TooFewSubjects(subjects.len()));
    }
    let folds = subjects
        .iter()
        .enumerate()
        .map(|(id, test)| Fold {
            id,
            test_subject: test.clone(),
            train_subjects: subjects.iter().filter(|s| *s != test).cloned().collect(),
        })
        .collect();
    Ok(FoldPlan { folds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Access {
    pub fold: usize,
    pub phase: Phase,
    pub subject: SubjectId,
}

/// Records which subjects' cycles each fold read, and in which phase.
#[derive(Debug, Default)]
pub struct AccessLog {
    entries: Mutex<Vec<Access>>,
}

impl AccessLog {
    pub fn new() -> Self {
        Self::default()
    }

    fn record(&self, fold: usize, phase: Phase, subject: &SubjectId) {
        self.entries.lock().expect("access log").push(Access {
            fold,
            phase,
            subject: subject.clone(),
        });
    }

    pub fn entries(&self) -> Vec<Access> {
        self.entries.lock().expect("access log").clone()
    }

    /// Training-phase reads of a fold's own test subject.
    pub fn leaks(&self, plan: &FoldPlan) -> Vec<Access> {
        self.entries()
            .into_iter()
            .filter(|a| a.phase == Phase::Train && plan.folds[a.fold].test_subject == a.subject)
            .collect()
    }
}

/// The only way experiment code reads cycles for a fold.
#[derive(Clone, Copy)]
pub struct FoldView<'a> {
    dataset: &'a Dataset,
    fold: &'a Fold,
    log: Option<&'a AccessLog>,
}

impl<'a> FoldView<'a> {
    pub fn new(dataset: &'a Dataset, fold: &'a Fold, log: Option<&'a AccessLog>) -> Self {
        FoldView { dataset, fold, log }
    }

    pub fn fold(&self) -> &'a Fold {
        self.fold
    }

    /// Cycles of `subject`, logged under `phase`.
    pub fn cycles_of(&self, subject: &'a SubjectId, phase: Phase) -> impl Iterator<Item = &'a GaitCycle> + 'a {
        let log = self.log;
        let fold = self.fold.id;
        self.dataset.cycles_of(subject).inspect(move |c| {
            if let Some(log) = log {
                log.record(fold, phase, &c.subject_id);
            }
        })
    }

    pub fn train_cycles(&self) -> Vec<&'a GaitCycle> {
        let view = *self;
        self.fold
            .train_subjects
            .iter()
            .flat_map(move |s| view.cycles_of(s, Phase::Train))
            .collect()
    }

    pub fn test_cycles(&self) -> Vec<&'a GaitCycle> {
        self.cycles_of(&self.fold.test_subject, Phase::Test).collect()
    }
}
