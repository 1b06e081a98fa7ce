//! Time normalization, cubic-spline resampling, wide-format vectors and
//! per-fold standardization.

pub mod features;
pub mod spline;
pub mod standardize;

pub use features::{
    devectorize, feature_index, time_normalize, vectorize, vectorize_channels, FeatureVector, NormalizeError, RawCycle,
    WrongDimension, FEATURE_DIM,
};
pub use spline::{spline_resample, NaturalSpline, SplineError};
pub use standardize::{StandardizeError, Standardizer};
