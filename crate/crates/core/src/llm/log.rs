//! Per-trial verdict log (JSON Lines).

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::verdict::Confidence;
use crate::domain::{ClassLabel, SubjectId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictLogRecord {
    pub subject_id: SubjectId,
    pub label: ClassLabel,
    pub cycle_index: u32,
    pub model_id: String,
    pub grounded: bool,
    pub prompt_sha256: String,
    pub attempts: u32,
    pub latency_ms: u64,
    pub raw_response: Option<String>,
    pub predicted: Option<ClassLabel>,
    pub confidence: Option<Confidence>,
    pub justification: Option<String>,
    pub error: Option<String>,
}

pub fn write_verdict_log<W: Write>(mut out: W, records: &[VerdictLogRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
