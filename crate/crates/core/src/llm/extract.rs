//! Pulling one JSON value out of a raw model completion.
//!
//! Repair is deliberately narrow: code fences, prose around the value, and
//! trailing commas before `}` or `]`. Anything else is reported so the caller
//! can re-prompt with the reason.

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("no JSON object or array found in the response")]
    NoJson,
    #[error("JSON value is not terminated")]
    Unterminated,
    #[error("invalid JSON: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    /// The JSON text that parsed, after any repair.
    pub text: String,
    pub value: Value,
    /// True when trailing commas had to be removed.
    pub repaired: bool,
}

/// Extracts and parses the first top-level JSON value in `raw`.
pub fn extract_json(raw: &str) -> Result<Extracted, ExtractError> {
    let trimmed = raw.trim();
    if let Ok(value) = serde_json::from_str::<Value>(trimmed) {
        if value.is_object() || value.is_array() {
            return Ok(Extracted {
                text: trimmed.to_string(),
                value,
                repaired: false,
            });
        }
    }
    let inner = fenced_block(trimmed).unwrap_or(trimmed);
    let candidate = first_balanced(inner)?;
    match serde_json::from_str::<Value>(candidate) {
        Ok(value) => Ok(Extracted {
            text: candidate.to_string(),
            value,
            repaired: false,
        }),
        Err(first_err) => {
            let fixed = strip_trailing_commas(candidate);
            if fixed == candidate {
                return Err(ExtractError::Invalid(first_err.to_string()));
            }
            serde_json::from_str::<Value>(&fixed)
                .map(|value| Extracted {
                    text: fixed.clone(),
                    value,
                    repaired: true,
                })
                .map_err(|e| ExtractError::Invalid(e.to_string()))
        }
    }
}

/// Content of the first ``` fenced block, with any language tag dropped.
fn fenced_block(text: &str) -> Option<&str> {
    let start = text.find("```")?;
    let after = &text[start + 3..];
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
    let tag = &after[..body_start].trim();
    if !tag.is_empty() && !tag.chars().all(|c| c.is_ascii_alphanumeric()) {
        // Inline fence such as ```{"a":1}```.
        let end = after.find("```")?;
        return Some(&after[..end]);
    }
    let body = &after[body_start..];
    let end = body.find("```").unwrap_or(body.len());
    Some(&body[..end])
}

/// The first `{...}` or `[...]` span with balanced brackets outside strings.
fn first_balanced(text: &str) -> Result<&str, ExtractError> {
    let start = text.find(['{', '[']).ok_or(ExtractError::NoJson)?;
    let mut stack: Vec<u8> = Vec::new();
    let mut in_string = false;
    let mut escaped = false;
    for (offset, &b) in text.as_bytes()[start..].iter().enumerate() {
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
            b'{' => stack.push(b'}'),
            b'[' => stack.push(b']'),
            b'}' | b']' => {
                if stack.pop() != Some(b) {
                    return Err(ExtractError::Invalid(format!(
                        "mismatched '{}' at byte {}",
                        b as char,
                        start + offset
                    )));
                }
                if stack.is_empty() {
                    return Ok(&text[start..=start + offset]);
                }
            }
            _ => {}
        }
    }
    Err(ExtractError::Unterminated)
}

/// Removes commas that directly precede `}` or `]` (ignoring whitespace),
/// leaving string contents untouched.
pub fn strip_trailing_commas(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if in_string {
            match c {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
        } else if c == b'"' {
            in_string = true;
        } else if c == b',' {
            let next = bytes[i + 1..]
                .iter()
                .find(|b| !b.is_ascii_whitespace())
                .copied();
            if matches!(next, Some(b'}') | Some(b']')) {
                i += 1;
                continue;
            }
        }
        // Copy whole UTF-8 sequences at once.
        let width = utf8_width(c);
        out.push_str(&text[i..i + width]);
        i += width;
    }
    out
}

fn utf8_width(first: u8) -> usize {
    match first {
        0x00..=0x7F => 1,
        0xC0..=0xDF => 2,
        0xE0..=0xEF => 3,
        _ => 4,
    }
}
