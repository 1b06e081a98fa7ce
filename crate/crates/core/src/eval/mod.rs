//! Leave-one-subject-out experiments and metrics.

pub mod bundle;
pub mod experiments;
pub mod loso;
pub mod metrics;
pub mod records;
pub mod stratify;

pub use bundle::{metrics_report, read_metrics, read_predictions, BundleError, MetricsReport, ResultsBundle, Score};
pub use experiments::{
    config_hash, run_centroid_experiment, run_knn_experiment, run_llm_experiment, run_ocsvm_experiment, BackendFactory,
    Diagnostics, ExperimentError, FailureEntry, FoldTuning, KnnConfig, LlmConfig, LlmRun, MockFactory, OcsvmConfig,
    OcsvmRun, ScalerFit, SharedBackend,
};
pub use loso::{loso_split, Access, AccessLog, Fold, FoldError, FoldPlan, FoldView, Phase};
pub use metrics::{binary_mcc, macro_f1, mcc, ConfusionMatrix, MetricError};
pub use records::{ExperimentMeta, PredictionRecord, PredictionSet, RecordError};
pub use stratify::{percent_2dp, stratify_by_confidence, ConfidenceStratum, DEFAULT_MIN_STRATUM};
