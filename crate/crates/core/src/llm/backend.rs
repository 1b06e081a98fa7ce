//! Chat backends and the resubmission loop.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::verdict::{parse_verdict, Confidence, SchemaError};
use crate::domain::ClassLabel;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TransportError {
    /// Timeouts, 5xx and connection failures.
    #[error("retryable transport failure: {0}")]
    Retryable(String),
    /// 4xx and anything that will not improve on retry.
    #[error("terminal transport failure: {0}")]
    Terminal(String),
}

/// One stateless completion call per prompt.
pub trait ChatBackend: Send + Sync {
    fn model_id(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<String, TransportError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            initial_backoff_ms: 500,
            max_backoff_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    pub fn no_backoff(max_retries: u32) -> Self {
        RetryPolicy {
            max_retries,
            initial_backoff_ms: 0,
            max_backoff_ms: 0,
        }
    }

    pub fn max_attempts(&self) -> u32 {
        1 + self.max_retries
    }

    /// Delay before attempt `attempt + 1` after a transport failure on `attempt` (1-based).
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64 << (attempt.saturating_sub(1)).min(20);
        Duration::from_millis(self.initial_backoff_ms.saturating_mul(factor).min(self.max_backoff_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmVerdict {
    pub predicted: ClassLabel,
    pub confidence: Confidence,
    pub justification: String,
    pub attempts: u32,
    pub raw_response: String,
    /// Attempts whose response arrived wrapped in a markdown fence.
    pub fence_stripped: u32,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ClassifyError {
    #[error("no valid verdict after {attempts} attempts: {last}")]
    Schema {
        last: SchemaError,
        raw_response: String,
        attempts: u32,
    },
    #[error("transport failed after {attempts} attempts: {message}")]
    Transport {
        message: String,
        attempts: u32,
        terminal: bool,
    },
}

impl ClassifyError {
    pub fn attempts(&self) -> u32 {
        match self {
            ClassifyError::Schema { attempts, .. } | ClassifyError::Transport { attempts, .. } => *attempts,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ClassifyError::Schema { last, .. } => last.kind(),
            ClassifyError::Transport { terminal: true, .. } => "transport-terminal",
            ClassifyError::Transport { terminal: false, .. } => "transport-exhausted",
        }
    }
}

/// Sends `prompt` until a schema-valid verdict arrives, resubmitting it
/// unchanged at most `max_retries` times.
pub fn classify_trial(
    backend: &dyn ChatBackend,
    prompt: &str,
    policy: &RetryPolicy,
) -> Result<LlmVerdict, ClassifyError> {
    let mut fences = 0;
    let mut last_err: Option<ClassifyError> = None;
    for attempt in 1..=policy.max_attempts() {
        match backend.complete(prompt) {
            Ok(raw) => match parse_verdict(&raw) {
                Ok(v) => {
                    fences += u32::from(v.fence_stripped);
                    return Ok(LlmVerdict {
                        predicted: v.predicted,
                        confidence: v.confidence,
                        justification: v.justification,
                        attempts: attempt,
                        raw_response: raw,
                        fence_stripped: fences,
                    });
                }
                Err(e) => {
                    last_err = Some(ClassifyError::Schema {
                        last: e,
                        raw_response: raw,
                        attempts: attempt,
                    });
                }
            },
            Err(TransportError::Terminal(message)) => {
                return Err(ClassifyError::Transport {
                    message,
                    attempts: attempt,
                    terminal: true,
                });
            }
            Err(TransportError::Retryable(message)) => {
                last_err = Some(ClassifyError::Transport {
                    message,
                    attempts: attempt,
                    terminal: false,
                });
                if attempt < policy.max_attempts() {
                    let wait = policy.backoff(attempt);
                    if !wait.is_zero() {
                        std::thread::sleep(wait);
                    }
                }
            }
        }
    }
    Err(last_err.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    struct Scripted {
        replies: Mutex<Vec<Result<String, TransportError>>>,
        calls: Mutex<Vec<String>>,
    }

    impl Scripted {
        fn new(mut replies: Vec<Result<String, TransportError>>) -> Self {
            replies.reverse();
            Scripted {
                replies: Mutex::new(replies),
                calls: Mutex::new(Vec::new()),
            }
        }
        fn calls(&self) -> Vec<String> {
            self.calls.lock().unwrap().clone()
        }
    }

    impl ChatBackend for Scripted {
        fn model_id(&self) -> &str {
            "scripted"
        }
        fn complete(&self, prompt: &str) -> Result<String, TransportError> {
            self.calls.lock().unwrap().push(prompt.to_string());
            self.replies
                .lock()
                .unwrap()
                .pop()
                .unwrap_or_else(|| Ok("garbage".to_string()))
        }
    }

    const VALID: &str = r#"{"class":"STIFF","confidence":"medium","justification":"Reduced knee peak."}"#;

    #[test]
    fn first_valid_reply() {
        let b = Scripted::new(vec![Ok(VALID.into())]);
        let v = classify_trial(&b, "p", &RetryPolicy::no_backoff(3)).unwrap();
        assert_eq!(v.attempts, 1);
        assert_eq!(v.predicted, ClassLabel::Stiff);
        assert_eq!(v.raw_response, VALID);
    }

    #[test]
    fn two_failures_then_valid() {
        let b = Scripted::new(vec![Ok("nope".into()), Ok("{}".into()), Ok(VALID.into())]);
        let v = classify_trial(&b, "same prompt", &RetryPolicy::no_backoff(3)).unwrap();
        assert_eq!(v.attempts, 3);
        assert_eq!(b.calls(), vec!["same prompt"; 3]);
    }

    #[test]
    fn exhaustion_after_one_plus_retries() {
        let b = Scripted::new(vec![]);
        let e = classify_trial(&b, "p", &RetryPolicy::no_backoff(3)).unwrap_err();
        assert_eq!(e.attempts(), 4);
        assert_eq!(b.calls().len(), 4);
        match e {
            ClassifyError::Schema { last, raw_response, .. } => {
                assert_eq!(last.kind(), "not-json");
                assert_eq!(raw_response, "garbage");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn transport_retry_then_success() {
        let b = Scripted::new(vec![
            Err(TransportError::Retryable("503".into())),
            Ok(format!("```json\n{VALID}\n```")),
        ]);
        let v = classify_trial(&b, "p", &RetryPolicy::no_backoff(3)).unwrap();
        assert_eq!(v.attempts, 2);
        assert_eq!(v.fence_stripped, 1);
    }

    #[test]
    fn terminal_transport_stops_immediately() {
        let b = Scripted::new(vec![Err(TransportError::Terminal("401".into()))]);
        let e = classify_trial(&b, "p", &RetryPolicy::no_backoff(3)).unwrap_err();
        assert_eq!(e.attempts(), 1);
        assert_eq!(e.kind(), "transport-terminal");
    }

    #[test]
    fn retryable_transport_exhausts() {
        let b = Scripted::new(
            (0..10)
                .map(|_| Err(TransportError::Retryable("timeout".into())))
                .collect(),
        );
        let e = classify_trial(&b, "p", &RetryPolicy::no_backoff(2)).unwrap_err();
        assert_eq!(e.attempts(), 3);
        assert_eq!(e.kind(), "transport-exhausted");
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy {
            max_retries: 5,
            initial_backoff_ms: 100,
            max_backoff_ms: 350,
        };
        assert_eq!(p.backoff(1), Duration::from_millis(100));
        assert_eq!(p.backoff(2), Duration::from_millis(200));
        assert_eq!(p.backoff(3), Duration::from_millis(350));
    }
}
