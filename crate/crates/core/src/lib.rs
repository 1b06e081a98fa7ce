//! Gait-classification benchmark harness.
//!
//! Synthetic seven-class gait cohorts, spline preprocessing into 143-value
//! feature vectors, KNN and one-class SVM baselines, a chat-completion
//! classification bridge, and leave-one-subject-out evaluation.

pub mod classic;
pub mod domain;
pub mod eval;
pub mod llm;
pub mod preprocess;

pub use domain::{BinaryLabel, ChannelId, ClassLabel, Dataset, GaitCycle, GeneratorConfig, SubjectId};
pub use preprocess::{FeatureVector, FEATURE_DIM};
