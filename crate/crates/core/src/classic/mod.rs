//! Reference classifiers: KNN and the one-class SVM with its tuner.

pub mod kernel;
pub mod knn;
pub mod ocsvm;
pub mod tune;

pub use kernel::{rbf_kernel, squared_euclidean, KernelError};
pub use knn::{KnnError, KnnModel, DEFAULT_K};
pub use ocsvm::{OcsvmDump, OcsvmError, OcsvmModel, SolveReport, SolverOptions};
pub use tune::{
    gamma_scale, stratified_folds, tune_ocsvm, tune_ocsvm_with, CellScore, TuneError, TuningGrid, TuningOutcome,
    TuningReport,
};
