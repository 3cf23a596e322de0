//! Project state, step records and project diffs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::codegen::DesignScaffold;
use crate::ir::{serialize_ir, validate_project, DataModel, GuiSkeleton, NodeId, Storyboard};
use crate::report::ValidationReport;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Project {
    pub storyboard: Storyboard,
    pub data_model: DataModel,
    pub skeletons: BTreeMap<NodeId, GuiSkeleton>,
    pub design_scaffold: Option<DesignScaffold>,
    /// Append-only.
    pub history: Vec<ExecutedStep>,
}

impl Project {
    pub fn new(storyboard: Storyboard, data_model: DataModel, skeletons: Vec<GuiSkeleton>) -> Self {
        Self {
            storyboard,
            data_model,
            skeletons: skeletons.into_iter().map(|s| (s.node_id, s)).collect(),
            design_scaffold: None,
            history: Vec::new(),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate_project(&self.storyboard, &self.data_model, self.skeletons.values())
    }

    pub fn skeleton_by_view(&self, view: &str) -> Option<&GuiSkeleton> {
        self.skeletons.values().find(|s| s.view_name == view)
    }

    /// Equality of the three IRs and the scaffold, ignoring history.
    pub fn same_ir(&self, other: &Project) -> bool {
        self.storyboard == other.storyboard
            && self.data_model == other.data_model
            && self.skeletons == other.skeletons
            && self.design_scaffold == other.design_scaffold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Plan,
    Storyboard,
    DesignScaffold,
    DataModel,
    NavigationPlan,
    Skeleton,
    Codegen,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Plan => "plan",
            Stage::Storyboard => "storyboard",
            Stage::DesignScaffold => "design_scaffold",
            Stage::DataModel => "data_model",
            Stage::NavigationPlan => "navigation_plan",
            Stage::Skeleton => "skeleton",
            Stage::Codegen => "codegen",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One record of `session.log.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExecutedStep {
    pub stage: Stage,
    /// View name, or `-` for whole-IR stages.
    pub target: String,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider_call_id: Option<String>,
    /// Raw model responses, one per attempt.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub responses: Vec<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl ExecutedStep {
    pub fn new(stage: Stage, target: &str, started_at: DateTime<Utc>) -> Self {
        Self {
            stage,
            target: target.to_string(),
            started_at,
            ended_at: Utc::now(),
            provider_call_id: None,
            responses: Vec::new(),
            note: String::new(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("step serializes")
    }
}

/// True when storyboard steps precede data-model steps, which precede
/// skeleton steps.
pub fn cascade_ordered(steps: &[ExecutedStep]) -> bool {
    let rank = |s: Stage| match s {
        Stage::Storyboard => Some(0),
        Stage::DataModel => Some(1),
        Stage::Skeleton => Some(2),
        _ => None,
    };
    let ranks: Vec<u8> = steps.iter().filter_map(|s| rank(s.stage)).collect();
    ranks.windows(2).all(|w| w[0] <= w[1])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeRef {
    pub id: NodeId,
    #[serde(rename = "swiftUIViewName")]
    pub swift_ui_view_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffSet<T> {
    pub added: Vec<T>,
    pub removed: Vec<T>,
    pub modified: Vec<T>,
}

impl<T> Default for DiffSet<T> {
    fn default() -> Self {
        Self {
            added: Vec::new(),
            removed: Vec::new(),
            modified: Vec::new(),
        }
    }
}

impl<T> DiffSet<T> {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.modified.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProjectDiff {
    pub nodes: DiffSet<NodeRef>,
    pub entities: DiffSet<String>,
    /// Skeleton files by view name.
    pub skeletons: DiffSet<String>,
    /// Storyboard description or entry node changed.
    pub storyboard_meta_changed: bool,
}

impl ProjectDiff {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
            && self.entities.is_empty()
            && self.skeletons.is_empty()
            && !self.storyboard_meta_changed
    }
}

fn diff_maps<K: Ord + Clone, V: PartialEq, T>(
    before: &BTreeMap<K, V>,
    after: &BTreeMap<K, V>,
    label: impl Fn(&K, &V) -> T,
) -> DiffSet<T> {
    let mut out = DiffSet::default();
    for (k, v) in before {
        match after.get(k) {
            None => out.removed.push(label(k, v)),
            Some(w) if w != v => out.modified.push(label(k, w)),
            Some(_) => {}
        }
    }
    for (k, v) in after {
        if !before.contains_key(k) {
            out.added.push(label(k, v));
        }
    }
    out
}

pub fn diff_project(before: &Project, after: &Project) -> ProjectDiff {
    let nodes = |p: &Project| -> BTreeMap<NodeId, _> {
        p.storyboard.nodes.iter().map(|n| (n.id, n.clone())).collect()
    };
    let entities = |p: &Project| -> BTreeMap<String, _> {
        p.data_model
            .entities
            .iter()
            .map(|e| (e.name.clone(), e.clone()))
            .collect()
    };
    let skeletons = |p: &Project| -> BTreeMap<String, _> {
        p.skeletons
            .values()
            .map(|s| (s.view_name.clone(), s.clone()))
            .collect()
    };
    ProjectDiff {
        nodes: diff_maps(&nodes(before), &nodes(after), |id, n| NodeRef {
            id: *id,
            swift_ui_view_name: n.swift_ui_view_name.clone(),
        }),
        entities: diff_maps(&entities(before), &entities(after), |k, _| k.clone()),
        skeletons: diff_maps(&skeletons(before), &skeletons(after), |k, _| k.clone()),
        storyboard_meta_changed: before.storyboard.description != after.storyboard.description
            || before.storyboard.entry_node_id != after.storyboard.entry_node_id,
    }
}

/// Which IR a direct edit replaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IrEdit {
    Storyboard(Storyboard),
    DataModel(DataModel),
    Skeleton(GuiSkeleton),
}

impl IrEdit {
    pub fn apply_to(&self, project: &Project) -> Project {
        let mut next = project.clone();
        match self {
            IrEdit::Storyboard(sb) => next.storyboard = sb.clone(),
            IrEdit::DataModel(dm) => next.data_model = dm.clone(),
            IrEdit::Skeleton(sk) => {
                next.skeletons.insert(sk.node_id, sk.clone());
            }
        }
        next
    }
}

/// Change request text describing a direct IR edit: a summary of what differs
/// followed by the edited document.
pub fn describe_ir_edit(project: &Project, edit: &IrEdit) -> String {
    let edited = edit.apply_to(project);
    let diff = diff_project(project, &edited);
    let mut out = String::from("The user edited an intermediate representation directly. Apply exactly these changes:\n");
    let before_nodes: BTreeMap<NodeId, _> =
        project.storyboard.nodes.iter().map(|n| (n.id, n)).collect();
    for n in &diff.nodes.added {
        let node = edited.storyboard.node(n.id).expect("added node");
        let _ = writeln!(
            out,
            "- add screen {} '{}' ({}) with edges to {:?}",
            n.id,
            node.name,
            n.swift_ui_view_name,
            node.outgoing_edges.iter().map(|e| e.0).collect::<Vec<_>>()
        );
    }
    for n in &diff.nodes.removed {
        let _ = writeln!(out, "- remove screen {} ({})", n.id, n.swift_ui_view_name);
    }
    for n in &diff.nodes.modified {
        let old = before_nodes[&n.id];
        let new = edited.storyboard.node(n.id).expect("modified node");
        let old_edges: BTreeSet<NodeId> = old.outgoing_edges.iter().copied().collect();
        let new_edges: BTreeSet<NodeId> = new.outgoing_edges.iter().copied().collect();
        for e in new_edges.difference(&old_edges) {
            let _ = writeln!(out, "- add connection {} -> {}", n.id, e);
        }
        for e in old_edges.difference(&new_edges) {
            let _ = writeln!(out, "- remove connection {} -> {}", n.id, e);
        }
        if old.name != new.name || old.description != new.description || old.swift_ui_view_name != new.swift_ui_view_name {
            let _ = writeln!(out, "- update screen {} text fields", n.id);
        }
    }
    for e in &diff.entities.added {
        let _ = writeln!(out, "- add entity {e}");
    }
    for e in &diff.entities.removed {
        let _ = writeln!(out, "- remove entity {e}");
    }
    for e in &diff.entities.modified {
        let _ = writeln!(out, "- modify entity {e}");
    }
    for s in diff.skeletons.added.iter().chain(&diff.skeletons.modified) {
        let _ = writeln!(out, "- update skeleton {s}");
    }
    if diff.storyboard_meta_changed {
        out.push_str("- update storyboard description or entry screen\n");
    }
    if diff.is_empty() {
        out.push_str("- no structural changes\n");
    }
    out.push_str("\nEdited document:\n");
    out.push_str(&match edit {
        IrEdit::Storyboard(sb) => serialize_ir(sb),
        IrEdit::DataModel(dm) => serialize_ir(dm),
        IrEdit::Skeleton(sk) => serialize_ir(sk),
    });
    out
}
