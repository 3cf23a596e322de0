//! Prompt templates with `{{name}}` placeholders.
//!
//! Default texts are compiled in from `templates/`; a directory of
//! `<id>.txt` files can override any of them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Plan,
    StoryboardMod,
    DataModelMod,
    SkeletonMod,
    NavigationPlan,
    DesignScaffold,
    CodeGen,
    InitialStoryboard,
    ViewDesign,
}

/// The output type a template's response must parse as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedSchema {
    ChangePlan,
    Storyboard,
    DataModel,
    GuiSkeleton,
    NavigationPlan,
    DesignScaffold,
    GeneratedProject,
    ViewDesignSpec,
}

impl TemplateId {
    pub const ALL: [TemplateId; 9] = [
        TemplateId::Plan,
        TemplateId::StoryboardMod,
        TemplateId::DataModelMod,
        TemplateId::SkeletonMod,
        TemplateId::NavigationPlan,
        TemplateId::DesignScaffold,
        TemplateId::CodeGen,
        TemplateId::InitialStoryboard,
        TemplateId::ViewDesign,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::Plan => "plan",
            TemplateId::StoryboardMod => "storyboard_mod",
            TemplateId::DataModelMod => "data_model_mod",
            TemplateId::SkeletonMod => "skeleton_mod",
            TemplateId::NavigationPlan => "navigation_plan",
            TemplateId::DesignScaffold => "design_scaffold",
            TemplateId::CodeGen => "code_gen",
            TemplateId::InitialStoryboard => "initial_storyboard",
            TemplateId::ViewDesign => "view_design",
        }
    }

    pub fn expected_schema(self) -> ExpectedSchema {
        match self {
            TemplateId::Plan => ExpectedSchema::ChangePlan,
            TemplateId::StoryboardMod | TemplateId::InitialStoryboard => ExpectedSchema::Storyboard,
            TemplateId::DataModelMod => ExpectedSchema::DataModel,
            TemplateId::SkeletonMod => ExpectedSchema::GuiSkeleton,
            TemplateId::NavigationPlan => ExpectedSchema::NavigationPlan,
            TemplateId::DesignScaffold => ExpectedSchema::DesignScaffold,
            TemplateId::CodeGen => ExpectedSchema::GeneratedProject,
            TemplateId::ViewDesign => ExpectedSchema::ViewDesignSpec,
        }
    }

    fn default_text(self) -> &'static str {
        match self {
            TemplateId::Plan => include_str!("../../templates/plan.txt"),
            TemplateId::StoryboardMod => include_str!("../../templates/storyboard_mod.txt"),
            TemplateId::DataModelMod => include_str!("../../templates/data_model_mod.txt"),
            TemplateId::SkeletonMod => include_str!("../../templates/skeleton_mod.txt"),
            TemplateId::NavigationPlan => include_str!("../../templates/navigation_plan.txt"),
            TemplateId::DesignScaffold => include_str!("../../templates/design_scaffold.txt"),
            TemplateId::CodeGen => include_str!("../../templates/code_gen.txt"),
            TemplateId::InitialStoryboard => {
                include_str!("../../templates/initial_storyboard.txt")
            }
            TemplateId::ViewDesign => include_str!("../../templates/view_design.txt"),
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unbound placeholder `{0}`")]
    UnboundPlaceholder(String),
    #[error("template file {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub text: String,
    /// One entry per binding that no placeholder used.
    pub warnings: Vec<String>,
}

/// A placeholder occurrence: byte range of `{{name}}` and the name.
fn placeholders(text: &str) -> Vec<(usize, usize, &str)> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < bytes.len() {
        if bytes[i] == b'{' && bytes[i + 1] == b'{' {
            let start = i;
            let name_start = i + 2;
            let mut j = name_start;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            let valid_name = j > name_start && !bytes[name_start].is_ascii_digit();
            if valid_name && text[j..].starts_with("}}") {
                out.push((start, j + 2, &text[name_start..j]));
                i = j + 2;
                continue;
            }
        }
        i += 1;
    }
    out
}

impl PromptTemplate {
    pub fn new(id: TemplateId, text: impl Into<String>) -> Self {
        Self {
            id,
            text: text.into(),
        }
    }

    pub fn builtin(id: TemplateId) -> Self {
        Self::new(id, id.default_text())
    }

    pub fn expected_schema(&self) -> ExpectedSchema {
        self.id.expected_schema()
    }

    pub fn placeholder_names(&self) -> BTreeSet<&str> {
        placeholders(&self.text).into_iter().map(|(_, _, n)| n).collect()
    }

    /// Single-pass substitution; bound values are never re-scanned.
    pub fn render(&self, bindings: &BTreeMap<&str, String>) -> Result<RenderedPrompt, TemplateError> {
        let found = placeholders(&self.text);
        let mut out = String::with_capacity(self.text.len());
        let mut cursor = 0;
        let mut used = BTreeSet::new();
        for (start, end, name) in found {
            let value = bindings
                .get(name)
                .ok_or_else(|| TemplateError::UnboundPlaceholder(name.to_string()))?;
            out.push_str(&self.text[cursor..start]);
            out.push_str(value);
            used.insert(name);
            cursor = end;
        }
        out.push_str(&self.text[cursor..]);
        let warnings = bindings
            .keys()
            .filter(|k| !used.contains(*k))
            .map(|k| format!("binding `{k}` is not used by template {}", self.id))
            .collect();
        Ok(RenderedPrompt {
            text: out,
            warnings,
        })
    }
}

/// Shared built-in template set.
pub fn default_templates() -> &'static TemplateSet {
    static DEFAULT: LazyLock<TemplateSet> = LazyLock::new(TemplateSet::default);
    &DEFAULT
}

/// The template for every id, built-in unless overridden.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<TemplateId, PromptTemplate>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self {
            templates: TemplateId::ALL
                .into_iter()
                .map(|id| (id, PromptTemplate::builtin(id)))
                .collect(),
        }
    }
}

impl TemplateSet {
    pub fn get(&self, id: TemplateId) -> &PromptTemplate {
        &self.templates[&id]
    }

    pub fn set(&mut self, template: PromptTemplate) {
        self.templates.insert(template.id, template);
    }

    /// Built-ins overridden by any `<id>.txt` present in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = Self::default();
        for id in TemplateId::ALL {
            let path = dir.join(format!("{id}.txt"));
            if path.exists() {
                let text = fs::read_to_string(&path).map_err(|e| TemplateError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                set.set(PromptTemplate::new(id, text));
            }
        }
        Ok(set)
    }

    pub fn render(
        &self,
        id: TemplateId,
        bindings: &BTreeMap<&str, String>,
    ) -> Result<RenderedPrompt, TemplateError> {
        self.get(id).render(bindings)
    }
}
