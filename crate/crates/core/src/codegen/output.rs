//! Generated source files and their structural checks.

use std::collections::{BTreeMap, BTreeSet};

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::design::DesignScaffold;
use crate::ir::{decode_value, NodeId, Storyboard};
use crate::report::{Finding, ValidationReport};
use crate::swift::lex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GeneratedView {
    #[serde(default)]
    pub id: NodeId,
    #[serde(default)]
    pub name: String,
    #[serde(rename = "swiftUIViewName")]
    pub swift_ui_view_name: String,
    pub view_code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utility {
    pub name: String,
    pub code: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Metrics {
    pub view_count: usize,
    pub lines_of_code: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GeneratedProject {
    pub views: Vec<GeneratedView>,
    #[serde(default)]
    pub utilities: Vec<Utility>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaffold_used: Option<DesignScaffold>,
    #[serde(default)]
    pub metrics: Metrics,
}

/// The part of a generated project a model returns.
#[derive(Debug, Clone, Deserialize)]
struct CodegenResponse {
    views: Vec<GeneratedView>,
    #[serde(default)]
    utilities: Vec<Utility>,
}

/// Newline-delimited lines of one source text.
pub fn count_lines(code: &str) -> usize {
    code.lines().count()
}

impl GeneratedProject {
    pub fn new(views: Vec<GeneratedView>, utilities: Vec<Utility>) -> Self {
        let mut gp = Self {
            views,
            utilities,
            scaffold_used: None,
            metrics: Metrics::default(),
        };
        gp.refresh_metrics();
        gp
    }

    pub fn refresh_metrics(&mut self) {
        self.metrics = Metrics {
            view_count: self.views.len(),
            lines_of_code: self
                .views
                .iter()
                .map(|v| count_lines(&v.view_code))
                .chain(self.utilities.iter().map(|u| count_lines(&u.code)))
                .sum(),
        };
    }

    pub fn view(&self, swift_ui_view_name: &str) -> Option<&GeneratedView> {
        self.views.iter().find(|v| v.swift_ui_view_name == swift_ui_view_name)
    }

    /// Parses a model response and fills ids and names from the storyboard.
    pub fn from_response(value: Value, sb: &Storyboard) -> Result<Self, ValidationReport> {
        let value = super::design::unwrap_key(value, "generatedProject");
        let response: CodegenResponse = decode_value(value).map_err(|e| e.to_report())?;
        let mut gp = Self::new(response.views, response.utilities);
        gp.fill_from_storyboard(sb);
        Ok(gp)
    }

    /// Sets each view's id and name from the storyboard node of the same
    /// view name, and orders views by storyboard order.
    pub fn fill_from_storyboard(&mut self, sb: &Storyboard) {
        for view in &mut self.views {
            if let Some(node) = sb.node_by_view(&view.swift_ui_view_name) {
                view.id = node.id;
                if view.name.trim().is_empty() {
                    view.name = node.name.clone();
                }
            }
        }
        let order: BTreeMap<&str, usize> = sb
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.swift_ui_view_name.as_str(), i))
            .collect();
        self.views
            .sort_by_key(|v| order.get(v.swift_ui_view_name.as_str()).copied().unwrap_or(usize::MAX));
    }
}

/// True when `code`, outside comments and strings, declares a struct, class,
/// enum or actor named `name`.
pub fn declares_type(code: &str, name: &str) -> bool {
    let pattern = format!(r"\b(struct|class|enum|actor)\s+{}\b", regex::escape(name));
    let re = Regex::new(&pattern).expect("declaration pattern");
    re.is_match(&lex(code).masked)
}

/// One view per storyboard node, exact names, declared types.
pub fn validate_generated(gp: &GeneratedProject, sb: &Storyboard) -> ValidationReport {
    let mut report = ValidationReport::new();
    let expected: BTreeSet<&str> = sb.nodes.iter().map(|n| n.swift_ui_view_name.as_str()).collect();
    let mut seen = BTreeSet::new();
    for (i, view) in gp.views.iter().enumerate() {
        let path = format!("views[{i}]");
        let name = view.swift_ui_view_name.as_str();
        if !expected.contains(name) {
            report.push(Finding::error(
                "unexpected_view",
                &path,
                format!("'{name}' is not a storyboard view"),
            ));
        } else if !seen.insert(name) {
            report.push(Finding::error("duplicate_view", &path, format!("'{name}' appears twice")));
        }
        if !declares_type(&view.view_code, name) {
            report.push(Finding::error(
                "type_name_mismatch",
                format!("{path}.viewCode"),
                format!("code does not declare a type named '{name}'"),
            ));
        }
    }
    for node in &sb.nodes {
        if !seen.contains(node.swift_ui_view_name.as_str()) {
            report.push(Finding::error(
                "missing_view",
                "views",
                format!("missing_view({})", node.swift_ui_view_name),
            ));
        }
    }
    let mut utility_names = BTreeSet::new();
    for (i, u) in gp.utilities.iter().enumerate() {
        if u.name.trim().is_empty() || !utility_names.insert(u.name.as_str()) {
            report.push(Finding::error(
                "invalid_utility",
                format!("utilities[{i}]"),
                "utility names must be non-empty and distinct",
            ));
        }
    }
    report
}
