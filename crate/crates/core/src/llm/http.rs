//! OpenAI-compatible chat-completions client.

use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

use super::backend::{ChatBackend, TransportError};

pub const API_KEY_ENV: &str = "GAITBENCH_API_KEY";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HttpConfigError {
    #[error("environment variable {API_KEY_ENV} is not set")]
    MissingCredential,
    #[error("endpoint URL is empty")]
    MissingEndpoint,
}

/// Reasoning-model families reject an explicit temperature.
pub fn supports_temperature(model_id: &str) -> bool {
    let m = model_id.to_ascii_lowercase();
    let m = m.rsplit('/').next().unwrap_or(&m);
    !(m.starts_with("gpt-5") || m.starts_with("o1") || m.starts_with("o3") || m.starts_with("o4"))
}

pub fn request_body(model_id: &str, prompt: &str) -> Value {
    let mut body = json!({
        "model": model_id,
        "messages": [{"role": "user", "content": prompt}],
    });
    if supports_temperature(model_id) {
        body["temperature"] = json!(0);
    }
    body
}

pub struct HttpBackend {
    url: String,
    model_id: String,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(
        endpoint: &str,
        model_id: impl Into<String>,
        api_key: impl Into<String>,
        timeout: Duration,
    ) -> Result<Self, HttpConfigError> {
        let endpoint = endpoint.trim_end_matches('/');
        if endpoint.is_empty() {
            return Err(HttpConfigError::MissingEndpoint);
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpBackend {
            url: format!("{endpoint}/chat/completions"),
            model_id: model_id.into(),
            api_key: api_key.into(),
            agent,
        })
    }

    /// Reads the credential from [`API_KEY_ENV`].
    pub fn from_env(endpoint: &str, model_id: impl Into<String>, timeout: Duration) -> Result<Self, HttpConfigError> {
        let key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or(HttpConfigError::MissingCredential)?;
        Self::new(endpoint, model_id, key, timeout)
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

fn map_error(e: ureq::Error) -> TransportError {
    match e {
        ureq::Error::Timeout(_) | ureq::Error::Io(_) | ureq::Error::ConnectionFailed | ureq::Error::HostNotFound => {
            TransportError::Retryable(e.to_string())
        }
        other => TransportError::Terminal(other.to_string()),
    }
}

impl ChatBackend for HttpBackend {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&self, prompt: &str) -> Result<String, TransportError> {
        let mut resp = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(request_body(&self.model_id, prompt))
            .map_err(map_error)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(map_error)?;
        if status >= 500 {
            return Err(TransportError::Retryable(format!("HTTP {status}: {text}")));
        }
        if status >= 400 {
            return Err(TransportError::Terminal(format!("HTTP {status}: {text}")));
        }
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| TransportError::Terminal(format!("response body is not JSON: {e}")))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| TransportError::Terminal("response has no choices[0].message.content".into()))
    }
}
