//! Canonical JSON encoding of the three IR kinds.
//!
//! Canonical text is pretty-printed with two-space indentation, a leading
//! `"schemaVersion": 1`, struct fields in declaration order and a trailing
//! newline, so text equality follows structural equality.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use super::data_model::DataModel;
use super::skeleton::GuiSkeleton;
use super::storyboard::Storyboard;
use crate::report::{Finding, ValidationReport};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(path: &str, message: &str) -> Self {
        Self {
            path: path.to_string(),
            message: message.to_string(),
        }
    }

    /// As a single `schema_error` finding.
    pub fn to_report(&self) -> ValidationReport {
        ValidationReport::single(Finding::error("schema_error", self.path.clone(), self.message.clone()))
    }

    pub fn missing(parent: &str, field: &str) -> Self {
        let path = if parent.is_empty() {
            field.to_string()
        } else {
            format!("{parent}.{field}")
        };
        Self {
            path,
            message: format!("missing field `{field}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error("parse error at byte {offset} ({path}): {message}")]
    Parse {
        offset: usize,
        path: String,
        message: String,
    },
    #[error("schema error at {}: {}", .0.path, .0.message)]
    Schema(SchemaError),
}

impl IrError {
    pub fn code(&self) -> &'static str {
        match self {
            IrError::Parse { .. } => "parse_error",
            IrError::Schema(_) => "schema_error",
        }
    }
}

impl From<SchemaError> for IrError {
    fn from(e: SchemaError) -> Self {
        IrError::Schema(e)
    }
}

/// An IR value with a canonical JSON document form.
pub trait IrDocument: Sized {
    /// Key of the optional wrapper object model responses use (`{"storyboard": {...}}`).
    const WRAPPER: &'static str;

    fn to_body(&self) -> Value;

    fn from_body(body: Value) -> Result<Self, SchemaError>;
}

impl IrDocument for Storyboard {
    const WRAPPER: &'static str = "storyboard";

    fn to_body(&self) -> Value {
        serde_json::to_value(self).expect("storyboard serializes")
    }

    fn from_body(body: Value) -> Result<Self, SchemaError> {
        decode_value(body)
    }
}

impl IrDocument for DataModel {
    const WRAPPER: &'static str = "dataModel";

    fn to_body(&self) -> Value {
        serde_json::to_value(self).expect("data model serializes")
    }

    fn from_body(body: Value) -> Result<Self, SchemaError> {
        decode_value(body)
    }
}

impl IrDocument for GuiSkeleton {
    const WRAPPER: &'static str = "skeleton";

    fn to_body(&self) -> Value {
        self.to_value()
    }

    fn from_body(body: Value) -> Result<Self, SchemaError> {
        GuiSkeleton::from_value(&body)
    }
}

/// Deserializes a JSON value, naming the first offending field on failure.
pub fn decode_value<T: DeserializeOwned>(body: Value) -> Result<T, SchemaError> {
    serde_path_to_error::deserialize(body).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        let message = e.into_inner().to_string();
        // serde reports a missing field at its parent; name the field itself.
        match message
            .strip_prefix("missing field `")
            .and_then(|m| m.strip_suffix('`'))
        {
            Some(field) => SchemaError::missing(&path, field),
            None => SchemaError { path, message },
        }
    })
}

/// Serializes to canonical text.
pub fn serialize_ir<T: IrDocument>(ir: &T) -> String {
    let mut doc = Map::new();
    doc.insert("schemaVersion".into(), Value::from(SCHEMA_VERSION));
    match ir.to_body() {
        Value::Object(body) => doc.extend(body),
        other => {
            doc.insert("value".into(), other);
        }
    }
    to_canonical_text(&Value::Object(doc))
}

/// Pretty JSON with a trailing newline.
pub fn to_canonical_text<T: Serialize + ?Sized>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON serialization");
    text.push('\n');
    text
}

/// Parses text into a JSON value, reporting syntax errors with byte offsets.
pub fn parse_json_text(text: &str) -> Result<Value, IrError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: Value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        IrError::Parse {
            offset: byte_offset(text, inner.line(), inner.column()),
            path,
            message: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| IrError::Parse {
        offset: byte_offset(text, e.line(), e.column()),
        path: String::new(),
        message: e.to_string(),
    })?;
    Ok(value)
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let before: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (before + column.saturating_sub(1)).min(text.len())
}

/// Converts a parsed JSON value into an IR, unwrapping a model-response
/// wrapper and checking `schemaVersion` when present.
pub fn ir_from_value<T: IrDocument>(value: Value) -> Result<T, SchemaError> {
    let mut value = value;
    if let Value::Object(map) = &mut value {
        if let Some(inner) = map.get(T::WRAPPER) {
            if inner.is_object() {
                value = inner.clone();
            }
        }
    }
    if let Value::Object(map) = &mut value {
        if let Some(version) = map.shift_remove("schemaVersion") {
            if version.as_u64() != Some(SCHEMA_VERSION) {
                return Err(SchemaError::new(
                    "schemaVersion",
                    &format!("unsupported schema version {version}"),
                ));
            }
        }
    } else {
        return Err(SchemaError::new("", "document must be a JSON object"));
    }
    T::from_body(value)
}

pub fn deserialize_ir<T: IrDocument>(text: &str) -> Result<T, IrError> {
    let value = parse_json_text(text)?;
    Ok(ir_from_value(value)?)
}
