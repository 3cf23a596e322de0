//! The data model: entity declarations written as Swift structs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::storyboard::is_valid_type_identifier;
use crate::report::{Finding, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityField {
    pub name: String,
    #[serde(rename = "type")]
    pub type_text: String,
}

impl EntityField {
    pub fn new(name: &str, type_text: &str) -> Self {
        Self {
            name: name.to_string(),
            type_text: type_text.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DataEntity {
    pub name: String,
    #[serde(default)]
    pub doc: String,
    #[serde(default)]
    pub fields: Vec<EntityField>,
    #[serde(default)]
    pub source_text: String,
}

impl DataEntity {
    /// Builds an entity from fields and renders its declaration.
    pub fn new(name: &str, doc: &str, fields: Vec<EntityField>) -> Self {
        let mut entity = Self {
            name: name.to_string(),
            doc: doc.to_string(),
            fields,
            source_text: String::new(),
        };
        entity.source_text = render_struct(&entity);
        entity
    }

    pub fn field(&self, name: &str) -> Option<&EntityField> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Fills whichever of `fields` / `source_text` is missing from the other.
    pub fn completed(mut self) -> Self {
        if self.fields.is_empty() && !self.source_text.trim().is_empty() {
            if let Some(parsed) = parse_struct(&self.source_text) {
                if self.name.is_empty() {
                    self.name = parsed.name;
                }
                if self.doc.is_empty() {
                    self.doc = parsed.doc;
                }
                self.fields = parsed.fields;
            }
        }
        if self.source_text.trim().is_empty() {
            self.source_text = render_struct(&self);
        }
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataModel {
    pub entities: Vec<DataEntity>,
}

impl DataModel {
    pub fn new(entities: Vec<DataEntity>) -> Self {
        Self { entities }
    }

    pub fn entity(&self, name: &str) -> Option<&DataEntity> {
        self.entities.iter().find(|e| e.name == name)
    }

    /// Instance names match type names case-insensitively (`note` -> `Note`).
    pub fn entity_for_instance(&self, instance: &str) -> Option<&DataEntity> {
        self.entities
            .iter()
            .find(|e| e.name.eq_ignore_ascii_case(instance))
    }

    pub fn completed(self) -> Self {
        Self {
            entities: self.entities.into_iter().map(DataEntity::completed).collect(),
        }
    }

    /// Resolves a dotted reference such as `order.customer.name`. Each
    /// segment after the first names a field; intermediate fields must have
    /// an entity type.
    pub fn resolve(&self, reference: &str) -> Result<&EntityField, String> {
        let mut parts = reference.split('.');
        let head = parts.next().unwrap_or_default();
        let mut entity = self
            .entity_for_instance(head)
            .ok_or_else(|| format!("no entity named like '{head}'"))?;
        let mut resolved: Option<&EntityField> = None;
        for part in parts {
            if let Some(prev) = resolved {
                let inner = base_type_name(&prev.type_text);
                entity = self
                    .entity(inner)
                    .ok_or_else(|| format!("field '{}' is not an entity", prev.name))?;
            }
            resolved = Some(
                entity
                    .field(part)
                    .ok_or_else(|| format!("entity '{}' has no field '{part}'", entity.name))?,
            );
        }
        resolved.ok_or_else(|| format!("'{reference}' names no field"))
    }
}

/// Strips optionals and collection brackets: `[Note]?` -> `Note`.
pub fn base_type_name(type_text: &str) -> &str {
    type_text
        .trim()
        .trim_end_matches(['?', '!'])
        .trim_start_matches('[')
        .trim_end_matches(']')
        .trim()
}

pub fn validate_data_model(dm: &DataModel) -> ValidationReport {
    let mut report = ValidationReport::new();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for entity in &dm.entities {
        *counts.entry(entity.name.as_str()).or_default() += 1;
    }
    for (idx, entity) in dm.entities.iter().enumerate() {
        let at = |suffix: &str| format!("entities[{idx}]{suffix}");
        if !is_valid_type_identifier(&entity.name) {
            report.push(Finding::error(
                "invalid_entity_name",
                at(".name"),
                format!("'{}' is not a valid type identifier", entity.name),
            ));
        }
        if counts[entity.name.as_str()] > 1 {
            report.push(Finding::error(
                "duplicate_entity",
                at(".name"),
                format!("entity '{}' is declared more than once", entity.name),
            ));
        }
        let mut seen = BTreeSet::new();
        for (fidx, field) in entity.fields.iter().enumerate() {
            let path = at(&format!(".fields[{fidx}]"));
            if !seen.insert(field.name.as_str()) {
                report.push(Finding::error(
                    "duplicate_field",
                    path.clone(),
                    format!("field '{}' repeats in '{}'", field.name, entity.name),
                ));
            }
            if !is_valid_type_identifier(&field.name) {
                report.push(Finding::error(
                    "invalid_field_name",
                    path.clone(),
                    format!("'{}' is not a valid identifier", field.name),
                ));
            }
            if field.type_text.trim().is_empty() {
                report.push(Finding::error(
                    "empty_field_type",
                    path,
                    format!("field '{}' has no type", field.name),
                ));
            }
        }
        if let Some(parsed) = parse_struct(&entity.source_text) {
            if parsed.name != entity.name || parsed.fields != entity.fields {
                report.push(Finding::warning(
                    "source_mismatch",
                    at(".sourceText"),
                    "declaration text disagrees with the field list",
                ));
            }
        }
    }
    report
}

/// Renders an entity as a Swift struct declaration.
pub fn render_struct(entity: &DataEntity) -> String {
    let mut out = String::new();
    if !entity.doc.is_empty() {
        out.push_str(&format!("/// {}\n", entity.doc));
    }
    out.push_str(&format!("struct {} {{\n", entity.name));
    for field in &entity.fields {
        out.push_str(&format!("    var {}: {}\n", field.name, field.type_text));
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedStruct {
    pub name: String,
    pub doc: String,
    pub fields: Vec<EntityField>,
}

/// Lexically reads the first `struct` declaration: its `///` doc lines and
/// its stored `let`/`var` properties at the top nesting level. Computed
/// properties are skipped.
pub fn parse_struct(source: &str) -> Option<ParsedStruct> {
    let mut doc_lines: Vec<&str> = Vec::new();
    let mut lines = source.lines();
    let mut header = None;
    for line in lines.by_ref() {
        let trimmed = line.trim();
        if let Some(doc) = trimmed.strip_prefix("///") {
            doc_lines.push(doc.trim());
            continue;
        }
        if let Some(name) = struct_name(trimmed) {
            header = Some((name, trimmed.contains('{')));
            break;
        }
        if !trimmed.is_empty() && !trimmed.starts_with('@') {
            doc_lines.clear();
        }
    }
    let (name, opened) = header?;
    let mut depth: i32 = if opened { 1 } else { 0 };
    let mut fields = Vec::new();
    for line in lines {
        let code = line.split("//").next().unwrap_or_default().trim();
        if depth == 1 {
            if let Some(field) = stored_property(code) {
                fields.push(field);
            }
        }
        for c in code.chars() {
            match c {
                '{' => depth += 1,
                '}' => depth -= 1,
                _ => {}
            }
        }
        if depth <= 0 && code.contains('}') {
            break;
        }
    }
    Some(ParsedStruct {
        name,
        doc: doc_lines.join(" "),
        fields,
    })
}

fn struct_name(line: &str) -> Option<String> {
    let mut words = line.split_whitespace();
    while let Some(word) = words.next() {
        if word == "struct" {
            let raw = words.next()?;
            let name: String = raw
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
                .collect();
            return (!name.is_empty()).then_some(name);
        }
        if !matches!(word, "public" | "internal" | "private" | "fileprivate" | "final") {
            return None;
        }
    }
    None
}

fn stored_property(code: &str) -> Option<EntityField> {
    let rest = code
        .split_whitespace()
        .skip_while(|w| w.starts_with('@') || matches!(*w, "public" | "private" | "internal" | "fileprivate" | "static"))
        .collect::<Vec<_>>()
        .join(" ");
    let rest = rest
        .strip_prefix("let ")
        .or_else(|| rest.strip_prefix("var "))?;
    let (name, ty) = rest.split_once(':')?;
    let ty = ty.split('=').next().unwrap_or_default();
    if ty.contains('{') {
        return None;
    }
    let name = name.trim();
    let ty = ty.trim();
    if name.is_empty() || ty.is_empty() {
        return None;
    }
    Some(EntityField::new(name, ty))
}
