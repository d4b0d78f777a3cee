//! Chat template shared by training data and remote inference.

use serde::{Deserialize, Serialize};

use crate::model::{estimate_token_length, from_json_with, to_json, CodecError, ParseMode, SlideDoc, Status, TOKEN_BUDGET};

use super::{Role, RoleError};

const REVIEWER_TXT: &str = include_str!("../../resources/prompts/reviewer.txt");
const CONTRIBUTOR_TXT: &str = include_str!("../../resources/prompts/contributor.txt");
const JUDGE_TXT: &str = include_str!("../../resources/prompts/judge.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        Message {
            role: role.to_string(),
            content: content.into(),
        }
    }
}

/// Splits a `#version N` header off a prompt resource.
fn split_version(raw: &str) -> (u32, &str) {
    let (first, rest) = raw.split_once('\n').unwrap_or((raw, ""));
    match first.trim().strip_prefix("#version ").and_then(|v| v.trim().parse().ok()) {
        Some(v) => (v, rest.trim_end()),
        None => (0, raw.trim_end()),
    }
}

pub fn system_prompt(role: Role) -> &'static str {
    match role {
        Role::Reviewer => split_version(REVIEWER_TXT).1,
        Role::Contributor => split_version(CONTRIBUTOR_TXT).1,
    }
}

pub fn prompt_version(role: Role) -> u32 {
    match role {
        Role::Reviewer => split_version(REVIEWER_TXT).0,
        Role::Contributor => split_version(CONTRIBUTOR_TXT).0,
    }
}

/// Judge instructions and their version.
pub fn judge_prompt() -> (u32, &'static str) {
    split_version(JUDGE_TXT)
}

/// The user message for `role`: the reviewer sees no statuses, the
/// contributor sees the TENTATIVE tags it must act on.
pub fn user_content(role: Role, doc: &SlideDoc) -> Result<String, RoleError> {
    let shown = match role {
        Role::Reviewer => doc.with_status(Status::Final),
        Role::Contributor => doc.clone(),
    };
    let text = to_json(&shown).map_err(|e| RoleError::Contract(e.to_string()))?;
    let tokens = estimate_token_length(&text);
    if tokens > TOKEN_BUDGET {
        return Err(RoleError::Budget {
            source_id: doc.source_id.clone(),
            tokens,
            budget: TOKEN_BUDGET,
        });
    }
    Ok(text)
}

/// System and user messages for one request.
pub fn format_prompt(role: Role, doc: &SlideDoc) -> Result<Vec<Message>, RoleError> {
    Ok(vec![
        Message::new("system", system_prompt(role)),
        Message::new("user", user_content(role, doc)?),
    ])
}

/// Parses a model reply into a slide, repairing common wrapping first.
pub fn parse_response(role: Role, text: &str) -> Result<SlideDoc, RoleError> {
    let first = match from_json_with(text, ParseMode::Tolerant) {
        Ok(doc) => return Ok(doc),
        Err(e) => e,
    };
    let irreparable = |err: &CodecError| RoleError::Irreparable {
        role,
        message: err.to_string(),
        raw: text.to_string(),
    };
    let Some(candidate) = repair(text) else {
        return Err(irreparable(&first));
    };
    from_json_with(candidate, ParseMode::Tolerant).map_err(|e| irreparable(&e))
}

/// Extracts the first balanced top-level JSON object, skipping prose and
/// code fences around it. `None` when the object never closes.
pub fn repair(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' | b'[' => depth += 1,
            b'}' | b']' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    None
}
