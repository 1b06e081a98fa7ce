//! Gait data types, normative templates and the synthetic cohort generator.

pub mod channel;
pub mod cycle;
pub mod generator;
pub mod io;
pub mod label;
pub mod templates;

pub use channel::{ChannelError, ChannelId, Feature, Side};
pub use cycle::{
    validate_dataset, Channels, CycleKey, Dataset, GaitCycle, SubjectId, ValidationReport, Violation, Waveform,
    TIMEPOINTS, TIMEPOINT_PERCENT,
};
pub use generator::{
    apply_class_transform, emulation_intensities, generate_dataset, subject_base, ConfigError, GeneratorConfig,
    TransformParams, EMULATION_VARIATION, RNG_ALGORITHM,
};
pub use io::{load_dataset, read_dataset, save_dataset, write_dataset, DatasetIoError};
pub use label::{BinaryLabel, ClassLabel, UnknownLabel};
pub use templates::normal_template;
