//! Prompt templates and placeholder substitution.

use sha2::{Digest, Sha256};
use thiserror::Error;

pub const FEATURE_PLACEHOLDER: &str = "feature_text";
pub const REFERENCE_PLACEHOLDER: &str = "reference_text";

const GROUNDED: &str = include_str!("../../assets/prompt_grounded.txt");
const UNGROUNDED: &str = include_str!("../../assets/prompt_ungrounded.txt");

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PromptError {
    #[error("template contains unknown placeholder {{{0}}}")]
    UnknownPlaceholder(String),
    #[error("template lacks the {{{0}}} placeholder")]
    MissingPlaceholder(&'static str),
    #[error("template expects reference text but none was given")]
    ReferenceRequired,
    #[error("reference text given but the template has no {{reference_text}} placeholder")]
    ReferenceUnused,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    name: String,
    text: String,
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        PromptTemplate {
            name: name.into(),
            text: text.into(),
        }
    }

    pub fn grounded() -> Self {
        Self::new("grounded", GROUNDED)
    }

    pub fn ungrounded() -> Self {
        Self::new("ungrounded", UNGROUNDED)
    }

    pub fn for_grounding(grounded: bool) -> Self {
        if grounded {
            Self::grounded()
        } else {
            Self::ungrounded()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn sha256(&self) -> String {
        sha256_hex(&self.text)
    }

    pub fn placeholders(&self) -> Vec<String> {
        segments(&self.text)
            .into_iter()
            .filter_map(|s| match s {
                Segment::Placeholder(p) => Some(p.to_string()),
                Segment::Literal(_) => None,
            })
            .collect()
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

enum Segment<'a> {
    Literal(&'a str),
    Placeholder(&'a str),
}

/// Splits on `{identifier}`; any other brace is literal text.
fn segments(text: &str) -> Vec<Segment<'_>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut literal_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let mut j = i + 1;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            let ident_ok = j > i + 1 && !bytes[i + 1].is_ascii_digit();
            if ident_ok && j < bytes.len() && bytes[j] == b'}' {
                out.push(Segment::Literal(&text[literal_start..i]));
                out.push(Segment::Placeholder(&text[i + 1..j]));
                i = j + 1;
                literal_start = i;
                continue;
            }
        }
        i += 1;
    }
    out.push(Segment::Literal(&text[literal_start..]));
    out
}

/// Substitutes `{feature_text}` and `{reference_text}` in one pass; inserted
/// text is never rescanned.
pub fn assemble_prompt(
    trial_text: &str,
    reference_text: Option<&str>,
    template: &PromptTemplate,
) -> Result<String, PromptError> {
    let segs = segments(template.text());
    let mut has_feature = false;
    let mut has_reference = false;
    for s in &segs {
        if let Segment::Placeholder(p) = s {
            match *p {
                FEATURE_PLACEHOLDER => has_feature = true,
                REFERENCE_PLACEHOLDER => has_reference = true,
                other => return Err(PromptError::UnknownPlaceholder(other.to_string())),
            }
        }
    }
    if !has_feature {
        return Err(PromptError::MissingPlaceholder(FEATURE_PLACEHOLDER));
    }
    let reference = match (has_reference, reference_text) {
        (true, Some(r)) => r,
        (true, None) => return Err(PromptError::ReferenceRequired),
        (false, Some(_)) => return Err(PromptError::ReferenceUnused),
        (false, None) => "",
    };
    let mut out = String::with_capacity(template.text().len() + trial_text.len() + reference.len());
    for s in segs {
        match s {
            Segment::Literal(l) => out.push_str(l),
            Segment::Placeholder(FEATURE_PLACEHOLDER) => out.push_str(trial_text),
            Segment::Placeholder(_) => out.push_str(reference),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grounded_prompt_keeps_reference_block() {
        let p = assemble_prompt("{\"a\":1}", Some("{\"r\":2}"), &PromptTemplate::grounded()).unwrap();
        assert!(p
            .lines()
            .any(|l| l.contains("Compare TRIAL DATA against REFERENCE STATS.")));
        assert!(p.contains("- REFERENCE STATS: {\"r\":2}\n"));
        assert!(p.ends_with("- TRIAL DATA (% Gait Cycle): {\"a\":1}\n"));
        assert!(p.starts_with("You are a clinical gait biomechanics expert"));
    }

    #[test]
    fn ungrounded_prompt_has_no_reference() {
        let p = assemble_prompt("{}", None, &PromptTemplate::ungrounded()).unwrap();
        assert!(!p.contains("REFERENCE STATS"));
        assert!(p.contains("Allowed classes (use strictly):"));
    }

    #[test]
    fn templates_share_everything_else() {
        let g = PromptTemplate::grounded();
        let u = PromptTemplate::ungrounded();
        let g_lines: Vec<&str> = g.text().lines().filter(|l| !l.contains("REFERENCE STATS")).collect();
        let u_lines: Vec<&str> = u.text().lines().collect();
        let g_nonblank: Vec<&&str> = g_lines.iter().filter(|l| !l.is_empty()).collect();
        let u_nonblank: Vec<&&str> = u_lines.iter().filter(|l| !l.is_empty()).collect();
        assert_eq!(g_nonblank, u_nonblank);
        assert_ne!(g.sha256(), u.sha256());
        assert_eq!(g.placeholders(), vec!["reference_text", "feature_text"]);
        assert_eq!(u.placeholders(), vec!["feature_text"]);
    }

    #[test]
    fn schema_braces_are_literal() {
        let t = PromptTemplate::new("t", "{  \n \"class\": 1 }\n{feature_text} {1x} {}");
        assert_eq!(
            assemble_prompt("X", None, &t).unwrap(),
            "{  \n \"class\": 1 }\nX {1x} {}"
        );
    }

    #[test]
    fn substitution_is_single_pass() {
        let t = PromptTemplate::new("t", "{feature_text}|{reference_text}");
        let p = assemble_prompt("{reference_text}", Some("R"), &t).unwrap();
        assert_eq!(p, "{reference_text}|R");
    }

    #[test]
    fn placeholder_errors() {
        let t = PromptTemplate::new("t", "{feature_text} {patient_name}");
        assert_eq!(
            assemble_prompt("x", None, &t),
            Err(PromptError::UnknownPlaceholder("patient_name".into()))
        );
        let t = PromptTemplate::new("t", "nothing");
        assert_eq!(
            assemble_prompt("x", None, &t),
            Err(PromptError::MissingPlaceholder("feature_text"))
        );
        assert_eq!(
            assemble_prompt("x", None, &PromptTemplate::grounded()),
            Err(PromptError::ReferenceRequired)
        );
        assert_eq!(
            assemble_prompt("x", Some("r"), &PromptTemplate::ungrounded()),
            Err(PromptError::ReferenceUnused)
        );
    }
}
