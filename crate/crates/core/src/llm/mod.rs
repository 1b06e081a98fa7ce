//! Text encoding of trials and reference statistics, prompt assembly, chat
//! backends and strict verdict parsing.

pub mod backend;
pub mod encode;
pub mod http;
pub mod log;
pub mod mock;
pub mod prompt;
pub mod reference;
pub mod verdict;

pub use backend::{classify_trial, ChatBackend, ClassifyError, LlmVerdict, RetryPolicy, TransportError};
pub use encode::{decode_channels, encode_channels, encode_trial, round2, DecodeError};
pub use http::{HttpBackend, HttpConfigError, API_KEY_ENV};
pub use log::{write_verdict_log, VerdictLogRecord};
pub use mock::{CentroidTable, FaultMode, MockBackend, MOCK_MODEL_ID};
pub use prompt::{assemble_prompt, sha256_hex, PromptError, PromptTemplate};
pub use reference::{build_reference_stats, render_reference, CellStats, ReferenceError, ReferenceStats};
pub use verdict::{parse_verdict, Confidence, ParsedVerdict, SchemaError};
