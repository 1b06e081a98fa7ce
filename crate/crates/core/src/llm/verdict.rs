//! Strict parsing of the model's JSON verdict.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::domain::ClassLabel;

pub const REQUIRED_FIELDS: [&str; 3] = ["class", "confidence", "justification"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    High,
    Medium,
    Low,
}

impl Confidence {
    pub const ALL: [Confidence; 3] = [Confidence::High, Confidence::Medium, Confidence::Low];

    pub const fn as_str(self) -> &'static str {
        match self {
            Confidence::High => "high",
            Confidence::Medium => "medium",
            Confidence::Low => "low",
        }
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Confidence {
    type Err = SchemaError;

    /// Trimmed, case-insensitive.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(Confidence::High),
            "medium" => Ok(Confidence::Medium),
            "low" => Ok(Confidence::Low),
            _ => Err(SchemaError::BadConfidence(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "kebab-case")]
pub enum SchemaError {
    #[error("response is not a JSON object: {0}")]
    NotJson(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("unexpected field `{0}`")]
    ExtraField(String),
    #[error("class `{0}` is not an allowed label")]
    BadClass(String),
    #[error("confidence `{0}` is not one of high, medium, low")]
    BadConfidence(String),
    #[error("justification is empty")]
    EmptyJustification,
}

impl SchemaError {
    pub fn kind(&self) -> &'static str {
        match self {
            SchemaError::NotJson(_) => "not-json",
            SchemaError::MissingField(_) => "missing-field",
            SchemaError::ExtraField(_) => "extra-field",
            SchemaError::BadClass(_) => "bad-class",
            SchemaError::BadConfidence(_) => "bad-confidence",
            SchemaError::EmptyJustification => "empty-justification",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedVerdict {
    pub predicted: ClassLabel,
    pub confidence: Confidence,
    pub justification: String,
    /// A markdown fence was removed before parsing.
    pub fence_stripped: bool,
}

/// Accepts the canonical label or the prompt's spaced spelling of the two
/// foot classes.
pub fn parse_class(s: &str) -> Result<ClassLabel, SchemaError> {
    let t = s.trim();
    match t {
        "OUTWARD FOOT" => Ok(ClassLabel::OutwardFoot),
        "INWARD FOOT" => Ok(ClassLabel::InwardFoot),
        _ => t
            .parse::<ClassLabel>()
            .map_err(|_| SchemaError::BadClass(s.to_string())),
    }
}

/// Removes one surrounding ```/```json fence, if present.
fn strip_fence(raw: &str) -> (&str, bool) {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return (t, false);
    };
    let Some(body) = rest.strip_suffix("```") else {
        return (t, false);
    };
    // drop an info string such as `json` on the opening line
    let body = match body.find('\n') {
        Some(nl) if body[..nl].trim().chars().all(|c| c.is_ascii_alphanumeric()) => &body[nl + 1..],
        _ => body,
    };
    (body.trim(), true)
}

fn string_field<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a str> {
    obj.get(key).and_then(Value::as_str)
}

pub fn parse_verdict(raw: &str) -> Result<ParsedVerdict, SchemaError> {
    let (body, fence_stripped) = strip_fence(raw);
    let value: Value = serde_json::from_str(body).map_err(|e| SchemaError::NotJson(e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(SchemaError::NotJson("top level is not an object".into()));
    };
    for field in REQUIRED_FIELDS {
        if !obj.contains_key(field) {
            return Err(SchemaError::MissingField(field.into()));
        }
    }
    if let Some(extra) = obj.keys().find(|k| !REQUIRED_FIELDS.contains(&k.as_str())) {
        return Err(SchemaError::ExtraField(extra.clone()));
    }
    let class = match obj.get("class") {
        Some(Value::String(s)) => parse_class(s)?,
        other => return Err(SchemaError::BadClass(other.map(Value::to_string).unwrap_or_default())),
    };
    let confidence = match obj.get("confidence") {
        Some(Value::String(s)) => s.parse::<Confidence>()?,
        other => {
            return Err(SchemaError::BadConfidence(
                other.map(Value::to_string).unwrap_or_default(),
            ))
        }
    };
    let justification = string_field(&obj, "justification")
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or(SchemaError::EmptyJustification)?;
    Ok(ParsedVerdict {
        predicted: class,
        confidence,
        justification: justification.to_string(),
        fence_stripped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn happy_path() {
        let v = parse_verdict(r#"{"class":"BOUNCY","confidence":"high","justification":"Knee flexion."}"#).unwrap();
        assert_eq!(v.predicted, ClassLabel::Bouncy);
        assert_eq!(v.confidence, Confidence::High);
        assert!(!v.fence_stripped);
    }

    #[test]
    fn descriptive_class_rejected() {
        let e = parse_verdict(r#"{"class":"BOUNCY, because…","confidence":"high","justification":"x"}"#).unwrap_err();
        assert_eq!(e.kind(), "bad-class");
    }

    #[test]
    fn each_error_is_distinguishable() {
        let cases = [
            ("not json", "not-json"),
            ("[1,2]", "not-json"),
            (r#"{"class":"NORMAL","justification":"x"}"#, "missing-field"),
            (
                r#"{"class":"NORMAL","confidence":"low","justification":"x","extra":1}"#,
                "extra-field",
            ),
            (
                r#"{"class":"normal","confidence":"low","justification":"x"}"#,
                "bad-class",
            ),
            (r#"{"class":3,"confidence":"low","justification":"x"}"#, "bad-class"),
            (
                r#"{"class":"NORMAL","confidence":"certain","justification":"x"}"#,
                "bad-confidence",
            ),
            (
                r#"{"class":"NORMAL","confidence":"low","justification":"   "}"#,
                "empty-justification",
            ),
            (
                r#"{"class":"NORMAL","confidence":"low","justification":null}"#,
                "empty-justification",
            ),
        ];
        for (raw, kind) in cases {
            assert_eq!(parse_verdict(raw).unwrap_err().kind(), kind, "{raw}");
        }
    }

    #[test]
    fn lenient_bits() {
        let v = parse_verdict(
            "```json\n{\"class\":\" OUTWARD FOOT \",\"confidence\":\" Medium\",\"justification\":\"y\"}\n```",
        )
        .unwrap();
        assert_eq!(v.predicted, ClassLabel::OutwardFoot);
        assert_eq!(v.confidence, Confidence::Medium);
        assert!(v.fence_stripped);
        let v = parse_verdict("```\n{\"class\":\"INWARD_FOOT\",\"confidence\":\"LOW\",\"justification\":\"y\"}```")
            .unwrap();
        assert_eq!(v.predicted, ClassLabel::InwardFoot);
        assert!(v.fence_stripped);
    }

    #[test]
    fn two_fences_are_not_stripped() {
        let raw = "```\n```\n{\"class\":\"NORMAL\",\"confidence\":\"low\",\"justification\":\"y\"}\n```\n```";
        assert_eq!(parse_verdict(raw).unwrap_err().kind(), "not-json");
    }
}
