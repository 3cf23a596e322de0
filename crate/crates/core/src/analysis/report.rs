//! Error report: navigation findings plus compiler-log categories.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::de::{Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::navigation::{NavigationCategory, NavigationFinding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CompilationCategory {
    MissingRequiredParameter,
    InvalidPropertyAccess,
    InvalidArgumentType,
    ImmutabilityViolation,
    ProtocolConformanceError,
    MissingImport,
    MalformedMemberAccess,
    AccessControlViolations,
    UndeclaredIdentifier,
    TypeUsageViolation,
    GenericInferenceFailure,
    InvalidParameterUsage,
    Unclassified,
}

impl CompilationCategory {
    pub const ALL: [CompilationCategory; 13] = [
        CompilationCategory::MissingRequiredParameter,
        CompilationCategory::InvalidPropertyAccess,
        CompilationCategory::InvalidArgumentType,
        CompilationCategory::ImmutabilityViolation,
        CompilationCategory::ProtocolConformanceError,
        CompilationCategory::MissingImport,
        CompilationCategory::MalformedMemberAccess,
        CompilationCategory::AccessControlViolations,
        CompilationCategory::UndeclaredIdentifier,
        CompilationCategory::TypeUsageViolation,
        CompilationCategory::GenericInferenceFailure,
        CompilationCategory::InvalidParameterUsage,
        CompilationCategory::Unclassified,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CompilationCategory::MissingRequiredParameter => "Missing Required Parameter",
            CompilationCategory::InvalidPropertyAccess => "Invalid Property Access",
            CompilationCategory::InvalidArgumentType => "Invalid Argument Type",
            CompilationCategory::ImmutabilityViolation => "Immutability Violation",
            CompilationCategory::ProtocolConformanceError => "Protocol Conformance Error",
            CompilationCategory::MissingImport => "Missing Import",
            CompilationCategory::MalformedMemberAccess => "Malformed Member Access",
            CompilationCategory::AccessControlViolations => "Access Control Violations",
            CompilationCategory::UndeclaredIdentifier => "Undeclared Identifier",
            CompilationCategory::TypeUsageViolation => "Type Usage Violation",
            CompilationCategory::GenericInferenceFailure => "Generic Inference Failure",
            CompilationCategory::InvalidParameterUsage => "Invalid Parameter Usage",
            CompilationCategory::Unclassified => "Unclassified",
        }
    }
}

/// Keyword rules, checked in order against the lowercased message.
const RULES: &[(CompilationCategory, &[&str])] = &[
    (CompilationCategory::MalformedMemberAccess, &["cannot infer contextual base", "reference to member"]),
    (CompilationCategory::AccessControlViolations, &["inaccessible due to", "protection level"]),
    (CompilationCategory::MissingRequiredParameter, &["missing argument"]),
    (CompilationCategory::InvalidParameterUsage, &["extra argument", "incorrect argument label"]),
    (CompilationCategory::InvalidPropertyAccess, &["has no member"]),
    (CompilationCategory::InvalidArgumentType, &["cannot convert value"]),
    (CompilationCategory::ImmutabilityViolation, &["cannot assign to", "let constant", "'let' constant"]),
    (CompilationCategory::ProtocolConformanceError, &["does not conform to protocol"]),
    (CompilationCategory::MissingImport, &["no such module"]),
    (CompilationCategory::GenericInferenceFailure, &["could not be inferred"]),
    (CompilationCategory::TypeUsageViolation, &["cannot be used as a type", "is not a type"]),
    (CompilationCategory::UndeclaredIdentifier, &["unresolved identifier"]),
];

static UNDECLARED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"cannot find .* in scope").expect("undeclared regex"));

pub fn classify_diagnostic(message: &str) -> CompilationCategory {
    let lower = message.to_ascii_lowercase();
    for (category, keywords) in RULES {
        if keywords.iter().any(|k| lower.contains(k)) {
            return *category;
        }
    }
    if UNDECLARED.is_match(&lower) {
        return CompilationCategory::UndeclaredIdentifier;
    }
    CompilationCategory::Unclassified
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("log_parse_error({line_no}): {message}")]
pub struct LogParseError {
    pub line_no: usize,
    pub message: String,
}

static DIAGNOSTIC: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:[^:\s][^:]*:\d+:(?:\d+:)?\s*)?(error|warning|note):\s*(\S.*)$").expect("diagnostic regex")
});
static LOCATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[^:\s][^:]*:\d+:(?:\d+:)?").expect("location regex"));

/// Error diagnostics of a compiler log, classified. Lines without a
/// diagnostic shape (source excerpts, carets, build chatter) are skipped; a
/// line with a `file:line:` prefix but no readable severity is an error.
pub fn parse_compilation_log(log: &str) -> Result<Vec<(CompilationCategory, String)>, LogParseError> {
    let mut out = Vec::new();
    for (idx, raw) in log.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(caps) = DIAGNOSTIC.captures(line) {
            if &caps[1] == "error" {
                let message = caps[2].trim().to_string();
                out.push((classify_diagnostic(&message), message));
            }
        } else if LOCATION.is_match(line) {
            return Err(LogParseError {
                line_no: idx + 1,
                message: format!("unreadable diagnostic: {line}"),
            });
        }
    }
    Ok(out)
}

/// Counts keyed by label, serialized as a JSON object in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Counts(pub Vec<(String, usize)>);

impl Counts {
    pub fn get(&self, key: &str) -> usize {
        self.0.iter().find(|(k, _)| k == key).map_or(0, |(_, v)| *v)
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|(_, v)| v).sum()
    }
}

impl Serialize for Counts {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Counts {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Counts;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a map of counts")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Counts, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, usize>()? {
                    out.push((k, v));
                }
                Ok(Counts(out))
            }
        }
        d.deserialize_map(V)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavigationSection {
    pub findings: Vec<NavigationFinding>,
    pub counts: Counts,
    pub total: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompilationSection {
    pub counts: Counts,
    pub total: usize,
}

/// Serialized as `report.json`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub navigation: NavigationSection,
    pub compilation: CompilationSection,
    pub total: usize,
}

impl ErrorReport {
    pub fn navigation_count(&self, category: NavigationCategory) -> usize {
        self.navigation.counts.get(category.as_str())
    }

    pub fn compilation_count(&self, category: CompilationCategory) -> usize {
        self.compilation.counts.get(category.label())
    }

    pub fn to_json(&self) -> String {
        crate::ir::to_canonical_text(self)
    }
}

pub fn summarize(findings: &[NavigationFinding], compilation_log: Option<&str>) -> Result<ErrorReport, LogParseError> {
    let mut nav: BTreeMap<NavigationCategory, usize> = BTreeMap::new();
    for f in findings {
        *nav.entry(f.category).or_default() += 1;
    }
    let nav_counts = Counts(
        NavigationCategory::ALL
            .iter()
            .map(|c| (c.as_str().to_string(), nav.get(c).copied().unwrap_or(0)))
            .collect(),
    );

    let mut comp: BTreeMap<CompilationCategory, usize> = BTreeMap::new();
    if let Some(log) = compilation_log {
        for (category, _) in parse_compilation_log(log)? {
            *comp.entry(category).or_default() += 1;
        }
    }
    let comp_counts = Counts(
        CompilationCategory::ALL
            .iter()
            .map(|c| (c.label().to_string(), comp.get(c).copied().unwrap_or(0)))
            .collect(),
    );

    let navigation = NavigationSection {
        findings: findings.to_vec(),
        total: nav_counts.total(),
        counts: nav_counts,
    };
    let compilation = CompilationSection {
        total: comp_counts.total(),
        counts: comp_counts,
    };
    Ok(ErrorReport {
        total: navigation.total + compilation.total,
        navigation,
        compilation,
    })
}
