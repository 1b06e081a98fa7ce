//! Per-arm LOSO experiment runners.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::loso::{AccessLog, FoldPlan, FoldView};
use super::records::{ExperimentMeta, PredictionRecord, PredictionSet};
use crate::classic::{tune_ocsvm_with, CellScore, KnnError, KnnModel, SolverOptions, TuneError, TuningGrid, DEFAULT_K};
use crate::domain::{BinaryLabel, ClassLabel, Dataset, GaitCycle, SubjectId};
use crate::llm::{
    assemble_prompt, classify_trial, encode_trial, render_reference, sha256_hex, CentroidTable, ChatBackend,
    ClassifyError, FaultMode, MockBackend, PromptError, PromptTemplate, ReferenceError, ReferenceStats, RetryPolicy,
    VerdictLogRecord,
};
use crate::preprocess::{vectorize, StandardizeError, Standardizer};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("fold {fold}: {source}")]
    Knn { fold: usize, source: KnnError },
    #[error("fold {fold}: {source}")]
    Tune { fold: usize, source: TuneError },
    #[error("fold {fold}: {source}")]
    Standardize { fold: usize, source: StandardizeError },
    #[error("fold {fold}: {source}")]
    Reference { fold: usize, source: ReferenceError },
    #[error("fold {fold}: no training cycles")]
    EmptyTraining { fold: usize },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("backend setup failed: {0}")]
    Backend(String),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

pub fn config_hash<T: Serialize>(config: &T) -> String {
    sha256_hex(&serde_json::to_string(config).expect("config serializes"))
}

fn vectors(cycles: &[&GaitCycle]) -> Vec<Vec<f64>> {
    cycles.iter().map(|c| vectorize(c).into_inner()).collect()
}

fn fit_scaler<V: AsRef<[f64]>>(fold: usize, train: &[V], on: bool) -> Result<Option<Standardizer>, ExperimentError> {
    if !on {
        return Ok(None);
    }
    Standardizer::fit(train)
        .map(Some)
        .map_err(|source| ExperimentError::Standardize { fold, source })
}

fn scale(fold: usize, s: &Option<Standardizer>, v: Vec<f64>) -> Result<Vec<f64>, ExperimentError> {
    match s {
        Some(s) => s
            .apply(&v)
            .map_err(|source| ExperimentError::Standardize { fold, source }),
        None => Ok(v),
    }
}

fn meta(
    classifier: &str,
    grounded: bool,
    hash: String,
    plan: &FoldPlan,
    model_id: Option<String>,
    seed: u64,
) -> ExperimentMeta {
    ExperimentMeta {
        classifier: classifier.to_string(),
        grounded,
        config_hash: hash,
        fold_plan_hash: plan.hash(),
        model_id,
        seed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    /// Z-score features on each fold's training split.
    pub standardize: bool,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k: DEFAULT_K,
            standardize: false,
        }
    }
}

pub fn run_knn_experiment(
    dataset: &Dataset,
    plan: &FoldPlan,
    config: &KnnConfig,
    log: Option<&AccessLog>,
) -> Result<PredictionSet, ExperimentError> {
    let per_fold: Vec<Vec<PredictionRecord>> = plan
        .folds()
        .par_iter()
        .map(|fold| {
            let view = FoldView::new(dataset, fold, log);
            let train = view.train_cycles();
            let xs = vectors(&train);
            let scaler = fit_scaler(fold.id, &xs, config.standardize)?;
            let xs = xs
                .into_iter()
                .map(|v| scale(fold.id, &scaler, v))
                .collect::<Result<Vec<_>, _>>()?;
            let labels = train.iter().map(|c| c.label).collect();
            let model =
                KnnModel::fit(xs, labels, config.k).map_err(|source| ExperimentError::Knn { fold: fold.id, source })?;
            view.test_cycles()
                .into_iter()
                .map(|c| {
                    let x = scale(fold.id, &scaler, vectorize(c).into_inner())?;
                    Ok(PredictionRecord::new(&c.key(), fold.id).with_class(model.predict(&x)))
                })
                .collect()
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(PredictionSet::new(
        meta("knn", false, config_hash(config), plan, None, 0),
        per_fold.into_iter().flatten().collect(),
    ))
}

/// Which training cycles the OCSVM standardizer is fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalerFit {
    /// The NORMAL training cycles the final model is trained on.
    Normal,
    /// Every training cycle.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcsvmConfig {
    /// `None` uses the default grid scaled to each fold's training data.
    pub grid: Option<TuningGrid>,
    pub standardize: bool,
    pub scaler_fit: ScalerFit,
    pub seed: u64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OcsvmConfig {
    fn default() -> Self {
        let s = SolverOptions::default();
        OcsvmConfig {
            grid: None,
            standardize: true,
            scaler_fit: ScalerFit::Normal,
            seed: 0,
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldTuning {
    pub fold: usize,
    pub test_subject: SubjectId,
    pub gamma: f64,
    pub nu: f64,
    pub mean_mcc: f64,
    /// Some inner validation split held a single class.
    pub degenerate: bool,
    pub n_support: usize,
    pub rho: f64,
    pub cells: Vec<CellScore>,
}

#[derive(Debug, Clone)]
pub struct OcsvmRun {
    pub predictions: PredictionSet,
    pub tuning: Vec<FoldTuning>,
}

pub fn run_ocsvm_experiment(
    dataset: &Dataset,
    plan: &FoldPlan,
    config: &OcsvmConfig,
    log: Option<&AccessLog>,
) -> Result<OcsvmRun, ExperimentError> {
    let options = SolverOptions {
        tolerance: config.tolerance,
        max_iterations: config.max_iterations,
        ..SolverOptions::default()
    };
    let per_fold: Vec<(Vec<PredictionRecord>, FoldTuning)> = plan
        .folds()
        .par_iter()
        .map(|fold| {
            let view = FoldView::new(dataset, fold, log);
            let train = view.train_cycles();
            let xs = vectors(&train);
            let labels: Vec<BinaryLabel> = train.iter().map(|c| c.label.project_binary()).collect();
            let normals: Vec<&Vec<f64>> = xs
                .iter()
                .zip(&labels)
                .filter(|(_, l)| **l == BinaryLabel::Normal)
                .map(|(v, _)| v)
                .collect();
            let scaler = match config.scaler_fit {
                ScalerFit::Normal => fit_scaler(fold.id, &normals, config.standardize)?,
                ScalerFit::All => fit_scaler(fold.id, &xs, config.standardize)?,
            };
            let xs = xs
                .into_iter()
                .map(|v| scale(fold.id, &scaler, v))
                .collect::<Result<Vec<_>, _>>()?;
            let grid = match &config.grid {
                Some(g) => g.clone(),
                None => {
                    let scaled_normals: Vec<&Vec<f64>> = xs
                        .iter()
                        .zip(&labels)
                        .filter(|(_, l)| **l == BinaryLabel::Normal)
                        .map(|(v, _)| v)
                        .collect();
                    TuningGrid::scaled_default(&scaled_normals)
                }
            };
            let outcome = tune_ocsvm_with(&xs, &labels, &grid, config.seed, &options)
                .map_err(|source| ExperimentError::Tune { fold: fold.id, source })?;
            let model = &outcome.model;
            let records = view
                .test_cycles()
                .into_iter()
                .map(|c| {
                    let x = scale(fold.id, &scaler, vectorize(c).into_inner())?;
                    Ok(PredictionRecord::new(&c.key(), fold.id).with_binary(model.predict(&x)))
                })
                .collect::<Result<Vec<_>, ExperimentError>>()?;
            let tuning = FoldTuning {
                fold: fold.id,
                test_subject: fold.test_subject.clone(),
                gamma: outcome.report.gamma,
                nu: outcome.report.nu,
                mean_mcc: outcome.report.mean_mcc,
                degenerate: outcome.report.degenerate(),
                n_support: model.support_indices().len(),
                rho: model.rho(),
                cells: outcome.report.cells.clone(),
            };
            Ok((records, tuning))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let (records, tuning): (Vec<_>, Vec<_>) = per_fold.into_iter().unzip();
    Ok(OcsvmRun {
        predictions: PredictionSet::new(
            meta("ocsvm", false, config_hash(config), plan, None, config.seed),
            records.into_iter().flatten().collect(),
        ),
        tuning,
    })
}

/// Classifies by distance to per-class training means on raw features.
pub fn run_centroid_experiment(
    dataset: &Dataset,
    plan: &FoldPlan,
    log: Option<&AccessLog>,
) -> Result<PredictionSet, ExperimentError> {
    let mut records = Vec::new();
    for fold in plan.folds() {
        let view = FoldView::new(dataset, fold, log);
        let table = centroid_table(fold.id, &view.train_cycles())?;
        for c in view.test_cycles() {
            records.push(PredictionRecord::new(&c.key(), fold.id).with_class(table.classify(vectorize(c).as_slice())));
        }
    }
    Ok(PredictionSet::new(
        meta("nearest-centroid", false, String::new(), plan, None, 0),
        records,
    ))
}

fn centroid_table(fold: usize, train: &[&GaitCycle]) -> Result<CentroidTable, ExperimentError> {
    let samples: Vec<(ClassLabel, Vec<f64>)> = train.iter().map(|c| (c.label, vectorize(c).into_inner())).collect();
    CentroidTable::fit(&samples).map_err(|_| ExperimentError::EmptyTraining { fold })
}

/// Supplies the chat backend used for one fold.
pub trait BackendFactory: Sync {
    fn model_id(&self) -> String;
    /// `train` holds the fold's training cycles (never the test subject).
    fn for_fold(&self, fold: usize, train: &[&GaitCycle]) -> Result<Arc<dyn ChatBackend>, ExperimentError>;
}

/// The same backend for every fold.
pub struct SharedBackend(pub Arc<dyn ChatBackend>);

impl BackendFactory for SharedBackend {
    fn model_id(&self) -> String {
        self.0.model_id().to_string()
    }

    fn for_fold(&self, _fold: usize, _train: &[&GaitCycle]) -> Result<Arc<dyn ChatBackend>, ExperimentError> {
        Ok(self.0.clone())
    }
}

/// A [`MockBackend`] fitted on each fold's training cycles.
pub struct MockFactory {
    pub fault: FaultMode,
}

impl BackendFactory for MockFactory {
    fn model_id(&self) -> String {
        crate::llm::MOCK_MODEL_ID.to_string()
    }

    fn for_fold(&self, fold: usize, train: &[&GaitCycle]) -> Result<Arc<dyn ChatBackend>, ExperimentError> {
        Ok(Arc::new(MockBackend::with_fault(
            centroid_table(fold, train)?,
            self.fault,
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub grounded: bool,
    pub retry: RetryPolicy,
    /// Concurrent requests.
    pub jobs: usize,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            grounded: false,
            retry: RetryPolicy::default(),
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureEntry {
    pub subject_id: SubjectId,
    pub label: ClassLabel,
    pub cycle_index: u32,
    pub fold: usize,
    pub kind: String,
    pub attempts: u32,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_records: usize,
    pub n_failed: usize,
    pub failures: Vec<FailureEntry>,
    pub failure_kinds: BTreeMap<String, usize>,
    /// Responses that arrived wrapped in a markdown fence.
    pub fence_stripped: u64,
    /// Attempts used per trial, keyed by attempt count.
    pub attempts_histogram: BTreeMap<u32, usize>,
    /// OCSVM folds whose tuning hit a single-class validation split.
    pub degenerate_folds: Vec<usize>,
}

impl Diagnostics {
    pub fn for_set(set: &PredictionSet) -> Self {
        Diagnostics {
            n_records: set.len(),
            n_failed: set.failures().count(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct LlmRun {
    pub predictions: PredictionSet,
    pub verdicts: Vec<VerdictLogRecord>,
    pub diagnostics: Diagnostics,
    pub template_sha256: String,
}

struct Task<'a> {
    fold: usize,
    cycle: &'a GaitCycle,
    prompt: String,
    backend: Arc<dyn ChatBackend>,
}

pub fn run_llm_experiment(
    dataset: &Dataset,
    plan: &FoldPlan,
    factory: &dyn BackendFactory,
    config: &LlmConfig,
    log: Option<&AccessLog>,
) -> Result<LlmRun, ExperimentError> {
    let template = PromptTemplate::for_grounding(config.grounded);
    let mut tasks = Vec::new();
    for fold in plan.folds() {
        let view = FoldView::new(dataset, fold, log);
        let train = view.train_cycles();
        let reference = if config.grounded {
            let stats = ReferenceStats::from_cycles(train.iter().copied(), &fold.test_subject)
                .map_err(|source| ExperimentError::Reference { fold: fold.id, source })?;
            Some(render_reference(&stats))
        } else {
            None
        };
        let backend = factory.for_fold(fold.id, &train)?;
        for c in view.test_cycles() {
            let prompt = assemble_prompt(&encode_trial(c), reference.as_deref(), &template)?;
            tasks.push(Task {
                fold: fold.id,
                cycle: c,
                prompt,
                backend: backend.clone(),
            });
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let outcomes: Vec<(Result<crate::llm::LlmVerdict, ClassifyError>, u64)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let start = Instant::now();
                let r = classify_trial(t.backend.as_ref(), &t.prompt, &config.retry);
                (r, start.elapsed().as_millis() as u64)
            })
            .collect()
    });

    let mut records = Vec::with_capacity(tasks.len());
    let mut verdicts = Vec::with_capacity(tasks.len());
    let mut diag = Diagnostics::default();
    for (t, (outcome, latency_ms)) in tasks.iter().zip(outcomes) {
        let key = t.cycle.key();
        let mut rec = PredictionRecord::new(&key, t.fold);
        let mut entry = VerdictLogRecord {
            subject_id: key.subject_id.clone(),
            label: key.label,
            cycle_index: key.cycle_index,
            model_id: t.backend.model_id().to_string(),
            grounded: config.grounded,
            prompt_sha256: sha256_hex(&t.prompt),
            attempts: 0,
            latency_ms,
            raw_response: None,
            predicted: None,
            confidence: None,
            justification: None,
            error: None,
        };
        match outcome {
            Ok(v) => {
                diag.fence_stripped += u64::from(v.fence_stripped);
                *diag.attempts_histogram.entry(v.attempts).or_default() += 1;
                rec = rec.with_class(v.predicted);
                rec.confidence = Some(v.confidence);
                rec.justification = Some(v.justification.clone());
                rec.attempts = Some(v.attempts);
                entry.attempts = v.attempts;
                entry.raw_response = Some(v.raw_response);
                entry.predicted = Some(v.predicted);
                entry.confidence = Some(v.confidence);
                entry.justification = Some(v.justification);
            }
            Err(e) => {
                let kind = e.kind().to_string();
                *diag.attempts_histogram.entry(e.attempts()).or_default() += 1;
                *diag.failure_kinds.entry(kind.clone()).or_default() += 1;
                diag.failures.push(FailureEntry {
                    subject_id: key.subject_id.clone(),
                    label: key.label,
                    cycle_index: key.cycle_index,
                    fold: t.fold,
                    kind: kind.clone(),
                    attempts: e.attempts(),
                    message: e.to_string(),
                });
                rec.attempts = Some(e.attempts());
                rec.error = Some(kind.clone());
                entry.attempts = e.attempts();
                if let ClassifyError::Schema { raw_response, .. } = &e {
                    entry.raw_response = Some(raw_response.clone());
                }
                entry.error = Some(e.to_string());
            }
        }
        records.push(rec);
        verdicts.push(entry);
    }
    diag.n_records = records.len();
    diag.n_failed = diag.failures.len();

    let hash = config_hash(&(config, template.sha256()));
    Ok(LlmRun {
        predictions: PredictionSet::new(
            meta("llm", config.grounded, hash, plan, Some(factory.model_id()), 0),
            records,
        ),
        verdicts,
        diagnostics: diag,
        template_sha256: template.sha256(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{generate_dataset, GeneratorConfig};
    use crate::eval::loso::loso_split;
    use crate::eval::metrics::mcc;

    fn small() -> Dataset {
        generate_dataset(&GeneratorConfig {
            n_subjects: 4,
            cycles_per_class: 2,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn knn_covers_every_cycle_without_leaks() {
        let ds = small();
        let plan = loso_split(&ds).unwrap();
        let log = AccessLog::new();
        let set = run_knn_experiment(&ds, &plan, &KnnConfig::default(), Some(&log)).unwrap();
        set.check_against(&ds, &plan).unwrap();
        assert!(log.leaks(&plan).is_empty());
        assert!(!log.entries().is_empty());
    }

    #[test]
    fn knn_duplicated_subject_is_perfect_with_k1() {
        let ds = small();
        let mut cycles = ds.cycles().to_vec();
        let copies: Vec<GaitCycle> = ds
            .cycles_of(&"S01".into())
            .map(|c| GaitCycle {
                subject_id: "S99".into(),
                ..c.clone()
            })
            .collect();
        cycles.extend(copies);
        let ds = Dataset::from_cycles(cycles);
        let plan = loso_split(&ds).unwrap();
        let set = run_knn_experiment(
            &ds,
            &plan,
            &KnnConfig {
                k: 1,
                standardize: false,
            },
            None,
        )
        .unwrap();
        for r in set.records().iter().filter(|r| r.subject_id.as_str() == "S99") {
            assert_eq!(r.predicted, Some(r.label));
        }
    }

    #[test]
    fn ocsvm_logs_one_pair_per_fold() {
        let ds = small();
        let plan = loso_split(&ds).unwrap();
        let log = AccessLog::new();
        let run = run_ocsvm_experiment(&ds, &plan, &OcsvmConfig::default(), Some(&log)).unwrap();
        run.predictions.check_against(&ds, &plan).unwrap();
        assert_eq!(run.tuning.len(), 4);
        assert!(log.leaks(&plan).is_empty());
        assert!(run
            .predictions
            .records()
            .iter()
            .all(|r| r.predicted.is_none() && r.predicted_binary.is_some()));
    }

    #[test]
    fn llm_mock_grounded_and_ungrounded_select_the_same_trials() {
        let ds = small();
        let plan = loso_split(&ds).unwrap();
        let log = AccessLog::new();
        let factory = MockFactory { fault: FaultMode::None };
        let g = run_llm_experiment(
            &ds,
            &plan,
            &factory,
            &LlmConfig {
                grounded: true,
                ..Default::default()
            },
            Some(&log),
        )
        .unwrap();
        let u = run_llm_experiment(&ds, &plan, &factory, &LlmConfig::default(), None).unwrap();
        assert!(log.leaks(&plan).is_empty());
        g.predictions.check_against(&ds, &plan).unwrap();
        let keys = |s: &PredictionSet| s.records().iter().map(|r| r.key()).collect::<Vec<_>>();
        assert_eq!(keys(&g.predictions), keys(&u.predictions));
        assert!(g.predictions.records().iter().all(|r| r.confidence.is_some()));
        assert_ne!(g.verdicts[0].prompt_sha256, u.verdicts[0].prompt_sha256);
        assert_eq!(g.diagnostics.n_failed, 0);
    }

    #[test]
    fn mock_agrees_with_centroid_oracle() {
        let ds = small();
        let plan = loso_split(&ds).unwrap();
        let oracle = run_centroid_experiment(&ds, &plan, None).unwrap();
        let mock = run_llm_experiment(
            &ds,
            &plan,
            &MockFactory { fault: FaultMode::None },
            &LlmConfig::default(),
            None,
        )
        .unwrap();
        let agree = oracle
            .records()
            .iter()
            .zip(mock.predictions.records())
            .filter(|(a, b)| a.predicted == b.predicted)
            .count();
        assert!(agree as f64 >= 0.99 * oracle.len() as f64, "{agree}/{}", oracle.len());
        let a = mcc(&oracle.multiclass_confusion().unwrap()).unwrap();
        let b = mcc(&mock.predictions.multiclass_confusion().unwrap()).unwrap();
        assert!((a - b).abs() <= 0.02);
    }

    #[test]
    fn faults_become_failed_records() {
        let ds = small();
        let plan = loso_split(&ds).unwrap();
        let config = LlmConfig {
            retry: RetryPolicy::no_backoff(2),
            ..Default::default()
        };
        let run = run_llm_experiment(
            &ds,
            &plan,
            &MockFactory {
                fault: FaultMode::EveryNth { n: 4 },
            },
            &config,
            None,
        )
        .unwrap();
        let d = &run.diagnostics;
        assert_eq!(d.n_records, ds.len());
        assert!(d.n_failed > 0 && d.n_failed < ds.len());
        assert_eq!(d.attempts_histogram.get(&3).copied().unwrap_or(0), d.n_failed);
        assert_eq!(
            run.predictions.multiclass_confusion().unwrap().total() as usize,
            ds.len() - d.n_failed
        );
        let flaky = run_llm_experiment(
            &ds,
            &plan,
            &MockFactory {
                fault: FaultMode::FlakyFirst { k: 1 },
            },
            &config,
            None,
        )
        .unwrap();
        assert_eq!(flaky.diagnostics.n_failed, 0);
        assert_eq!(flaky.diagnostics.attempts_histogram.get(&2).copied(), Some(ds.len()));
    }
}
