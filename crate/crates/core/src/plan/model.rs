//! The change plan wire format and its validation against a project.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::project::Project;
use crate::ir::{decode_value, derive_view_name, is_valid_type_identifier, NodeId};
use crate::report::{Finding, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ChangeType {
    Storyboard,
    DataModel,
    GuiSkeleton,
    #[default]
    Mixed,
}

/// A screen named by a plan. For additions `id` is a plan-local label that is
/// replaced by a freshly allocated id on execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScreenRef {
    #[serde(default)]
    pub id: NodeId,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(
        default,
        rename = "swiftUIViewName",
        skip_serializing_if = "Option::is_none"
    )]
    pub swift_ui_view_name: Option<String>,
}

impl ScreenRef {
    pub fn new(id: u32, name: &str) -> Self {
        Self {
            id: NodeId(id),
            name: name.to_string(),
            description: String::new(),
            swift_ui_view_name: None,
        }
    }

    /// View name a new screen will get, before de-duplication.
    pub fn intended_view_name(&self) -> String {
        match self.swift_ui_view_name.as_deref() {
            Some(v) if is_valid_type_identifier(v) => v.to_string(),
            Some(v) => derive_view_name(v),
            None => derive_view_name(&self.name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Connection {
    pub from: NodeId,
    pub to: NodeId,
}

impl Connection {
    pub fn new(from: u32, to: u32) -> Self {
        Self {
            from: NodeId(from),
            to: NodeId(to),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct StoryboardChanges {
    pub add_screens: Vec<ScreenRef>,
    pub remove_screens: Vec<ScreenRef>,
    pub add_connections: Vec<Connection>,
    pub remove_connections: Vec<Connection>,
}

impl StoryboardChanges {
    pub fn is_empty(&self) -> bool {
        self.add_screens.is_empty()
            && self.remove_screens.is_empty()
            && self.add_connections.is_empty()
            && self.remove_connections.is_empty()
    }
}

/// A skeleton file (or, under `dataModelChanges`, an entity) named by a plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRef {
    #[serde(rename = "swiftUIViewName")]
    pub swift_ui_view_name: String,
    #[serde(default)]
    pub id: NodeId,
}

impl FileRef {
    pub fn new(view: &str, id: u32) -> Self {
        Self {
            swift_ui_view_name: view.to_string(),
            id: NodeId(id),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct GuiSkeletonChanges {
    pub files_to_modify: Vec<FileRef>,
    pub new_files_to_create: Vec<FileRef>,
    pub files_to_delete: Vec<FileRef>,
}

impl GuiSkeletonChanges {
    pub fn is_empty(&self) -> bool {
        self.files_to_modify.is_empty()
            && self.new_files_to_create.is_empty()
            && self.files_to_delete.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct DataModelChanges {
    pub files_to_modify: Vec<FileRef>,
}

impl DataModelChanges {
    pub fn is_empty(&self) -> bool {
        self.files_to_modify.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TechnicalDescription {
    pub summary: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ChangePlan {
    pub change_type: ChangeType,
    pub storyboard_changes: StoryboardChanges,
    pub gui_skeleton_changes: GuiSkeletonChanges,
    pub data_model_changes: DataModelChanges,
    pub technical_description: TechnicalDescription,
}

impl ChangePlan {
    pub fn is_empty(&self) -> bool {
        self.storyboard_changes.is_empty()
            && self.gui_skeleton_changes.is_empty()
            && self.data_model_changes.is_empty()
    }

    /// Parses a model response, accepting an optional `{"plan": {...}}` wrapper.
    pub fn from_value(value: Value) -> Result<Self, ValidationReport> {
        let value = match value {
            Value::Object(mut map) if map.len() == 1 && map.contains_key("plan") => {
                map.remove("plan").unwrap_or_default()
            }
            other => other,
        };
        if !value.is_object() {
            return Err(ValidationReport::single(Finding::error(
                "schema_error",
                "",
                "plan must be a JSON object",
            )));
        }
        decode_value(value).map_err(|e| e.to_report())
    }
}

/// Where a plan reference points after resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Target {
    /// An existing storyboard node.
    Existing(NodeId),
    /// Index into `storyboardChanges.addScreens`.
    Added(usize),
}

/// Resolves a skeleton file reference against the project and the plan's
/// added screens. View names win over ids because models echo names more
/// reliably than numbers.
pub fn resolve_file_ref(plan: &ChangePlan, project: &Project, file: &FileRef) -> Option<Target> {
    let sb = &project.storyboard;
    if let Some(node) = sb.node_by_view(&file.swift_ui_view_name) {
        return Some(Target::Existing(node.id));
    }
    let added = &plan.storyboard_changes.add_screens;
    if let Some(i) = added
        .iter()
        .position(|s| s.intended_view_name() == file.swift_ui_view_name)
    {
        return Some(Target::Added(i));
    }
    if file.id.is_assigned() {
        if let Some(i) = added.iter().position(|s| s.id == file.id) {
            return Some(Target::Added(i));
        }
        if sb.contains(file.id) {
            return Some(Target::Existing(file.id));
        }
    }
    None
}

/// Reference errors, create/delete conflicts and closure-rule violations.
pub fn validate_plan(plan: &ChangePlan, project: &Project) -> ValidationReport {
    let mut report = ValidationReport::new();
    let sb = &project.storyboard;
    let sc = &plan.storyboard_changes;

    let removed: BTreeSet<NodeId> = sc.remove_screens.iter().map(|s| s.id).collect();
    for (i, screen) in sc.remove_screens.iter().enumerate() {
        if !sb.contains(screen.id) {
            report.push(Finding::error(
                "unknown_node",
                format!("storyboardChanges.removeScreens[{i}]"),
                format!("screen {} does not exist", screen.id),
            ));
        }
    }

    let mut plan_ids: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut added_views: BTreeSet<String> = BTreeSet::new();
    for (i, screen) in sc.add_screens.iter().enumerate() {
        let path = format!("storyboardChanges.addScreens[{i}]");
        if screen.name.trim().is_empty() && screen.swift_ui_view_name.is_none() {
            report.push(Finding::error("empty_screen_name", &path, "new screen has no name"));
        }
        if screen.id.is_assigned() {
            if sb.contains(screen.id) {
                report.push(Finding::error(
                    "id_collision",
                    format!("{path}.id"),
                    format!("id {} already names an existing screen", screen.id),
                ));
            } else if plan_ids.insert(screen.id, i).is_some() {
                report.push(Finding::error(
                    "id_collision",
                    format!("{path}.id"),
                    format!("id {} is used by two new screens", screen.id),
                ));
            }
        }
        let view = screen.intended_view_name();
        if !added_views.insert(view.clone()) {
            report.push(Finding::warning(
                "duplicate_view_name",
                &path,
                format!("'{view}' is added twice and will be renamed"),
            ));
        }
    }

    let known_after = |id: NodeId| (sb.contains(id) && !removed.contains(&id)) || plan_ids.contains_key(&id);
    let removed_edges: BTreeSet<Connection> = sc.remove_connections.iter().copied().collect();
    let mut added_edges = BTreeSet::new();
    for (i, c) in sc.add_connections.iter().enumerate() {
        let path = format!("storyboardChanges.addConnections[{i}]");
        for (end, id) in [("from", c.from), ("to", c.to)] {
            if !known_after(id) {
                report.push(Finding::error(
                    "unknown_node",
                    format!("{path}.{end}"),
                    format!("screen {id} does not exist after this plan"),
                ));
            }
        }
        if c.from == c.to {
            report.push(Finding::error("self_edge", &path, format!("{} -> itself", c.from)));
        } else if (sb.has_edge(c.from, c.to) && !removed_edges.contains(c)) || !added_edges.insert(*c)
        {
            report.push(Finding::error(
                "duplicate_edge",
                &path,
                format!("{} -> {} already exists", c.from, c.to),
            ));
        }
    }
    for (i, c) in sc.remove_connections.iter().enumerate() {
        let path = format!("storyboardChanges.removeConnections[{i}]");
        let mut endpoints_ok = true;
        for (end, id) in [("from", c.from), ("to", c.to)] {
            if !sb.contains(id) {
                endpoints_ok = false;
                report.push(Finding::error(
                    "unknown_node",
                    format!("{path}.{end}"),
                    format!("screen {id} does not exist"),
                ));
            }
        }
        if endpoints_ok && !sb.has_edge(c.from, c.to) {
            report.push(Finding::error(
                "missing_edge",
                &path,
                format!("no edge {} -> {}", c.from, c.to),
            ));
        }
    }

    let gc = &plan.gui_skeleton_changes;
    let mut resolve_all = |list: &[FileRef], key: &str| -> Vec<Option<Target>> {
        list.iter()
            .enumerate()
            .map(|(i, f)| {
                let t = resolve_file_ref(plan, project, f);
                if t.is_none() {
                    report.push(Finding::error(
                        "unknown_node",
                        format!("guiSkeletonChanges.{key}[{i}]"),
                        format!("'{}' is neither an existing nor a new screen", f.swift_ui_view_name),
                    ));
                }
                t
            })
            .collect()
    };
    let modify = resolve_all(&gc.files_to_modify, "filesToModify");
    let create = resolve_all(&gc.new_files_to_create, "newFilesToCreate");
    let delete = resolve_all(&gc.files_to_delete, "filesToDelete");

    let delete_set: BTreeSet<Target> = delete.iter().flatten().copied().collect();
    let create_set: BTreeSet<Target> = create.iter().flatten().copied().collect();
    let modify_set: BTreeSet<Target> = modify.iter().flatten().copied().collect();

    for (i, t) in create.iter().enumerate() {
        let Some(t) = t else { continue };
        let path = format!("guiSkeletonChanges.newFilesToCreate[{i}]");
        if delete_set.contains(t) {
            report.push(Finding::error(
                "create_delete_conflict",
                &path,
                format!("'{}' is both created and deleted", gc.new_files_to_create[i].swift_ui_view_name),
            ));
        }
        if let Target::Existing(id) = t {
            if project.skeletons.contains_key(id) {
                report.push(Finding::warning(
                    "skeleton_exists",
                    &path,
                    format!("'{}' already has a skeleton; it will be regenerated", gc.new_files_to_create[i].swift_ui_view_name),
                ));
            }
        }
    }
    for (i, t) in modify.iter().enumerate() {
        if let Some(t) = t {
            if delete_set.contains(t) {
                report.push(Finding::error(
                    "modify_delete_conflict",
                    format!("guiSkeletonChanges.filesToModify[{i}]"),
                    format!("'{}' is both modified and deleted", gc.files_to_modify[i].swift_ui_view_name),
                ));
            }
        }
    }

    // Closure rule.
    for (i, screen) in sc.remove_screens.iter().enumerate() {
        if sb.contains(screen.id) && !delete_set.contains(&Target::Existing(screen.id)) {
            let view = sb.node(screen.id).map(|n| n.swift_ui_view_name.as_str()).unwrap_or("");
            report.push(Finding::error(
                "closure_violation",
                format!("storyboardChanges.removeScreens[{i}]"),
                format!("removed screen '{view}' is missing from filesToDelete"),
            ));
        }
    }
    for (i, screen) in sc.add_screens.iter().enumerate() {
        let t = Target::Added(i);
        if !create_set.contains(&t) && !modify_set.contains(&t) {
            report.push(Finding::error(
                "closure_violation",
                format!("storyboardChanges.addScreens[{i}]"),
                format!(
                    "new screen '{}' has no skeleton entry in newFilesToCreate",
                    screen.intended_view_name()
                ),
            ));
        }
    }
    for (i, t) in delete.iter().enumerate() {
        if let Some(Target::Existing(id)) = t {
            if !removed.contains(id) {
                report.push(Finding::error(
                    "closure_violation",
                    format!("guiSkeletonChanges.filesToDelete[{i}]"),
                    format!(
                        "'{}' is deleted but its screen stays in the storyboard",
                        gc.files_to_delete[i].swift_ui_view_name
                    ),
                ));
            }
        }
    }

    for (i, f) in plan.data_model_changes.files_to_modify.iter().enumerate() {
        if f.swift_ui_view_name.trim().is_empty() {
            report.push(Finding::error(
                "empty_entity_name",
                format!("dataModelChanges.filesToModify[{i}]"),
                "entity reference has no name",
            ));
        }
    }
    report
}
