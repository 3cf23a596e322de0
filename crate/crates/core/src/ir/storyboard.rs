//! The storyboard: a directed graph of screens joined by navigation edges.
//!
//! Edges live only on their source node (`outgoingEdges`); incoming edges are
//! computed on demand. All mutation goes through [`apply_storyboard_change`],
//! which returns a new value and leaves the input untouched.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::{Finding, ValidationReport};

/// Node identifier. Zero means "not yet assigned" and is replaced on ingestion.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const UNASSIGNED: NodeId = NodeId(0);

    pub fn is_assigned(self) -> bool {
        self.0 != 0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StoryboardNode {
    pub id: NodeId,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(rename = "swiftUIViewName")]
    pub swift_ui_view_name: String,
    #[serde(default)]
    pub outgoing_edges: Vec<NodeId>,
}

impl StoryboardNode {
    pub fn new(id: impl Into<NodeId>, name: &str, view_name: &str) -> Self {
        Self {
            id: id.into(),
            name: name.to_string(),
            description: String::new(),
            swift_ui_view_name: view_name.to_string(),
            outgoing_edges: Vec::new(),
        }
    }

    pub fn with_description(mut self, description: &str) -> Self {
        self.description = description.to_string();
        self
    }

    pub fn with_edges(mut self, edges: impl IntoIterator<Item = u32>) -> Self {
        self.outgoing_edges = edges.into_iter().map(NodeId).collect();
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Storyboard {
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_node_id: Option<NodeId>,
    pub nodes: Vec<StoryboardNode>,
}

/// One atomic structural edit of a storyboard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoryboardChange {
    AddScreen {
        name: String,
        description: String,
        view_name: Option<String>,
    },
    RemoveScreen(NodeId),
    AddConnection { from: NodeId, to: NodeId },
    RemoveConnection { from: NodeId, to: NodeId },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoryboardError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("edge {from} -> {to} already present")]
    DuplicateEdge { from: NodeId, to: NodeId },
    #[error("edge {from} -> {to} does not exist")]
    MissingEdge { from: NodeId, to: NodeId },
    #[error("self edge on node {0}")]
    SelfEdge(NodeId),
}

impl StoryboardError {
    pub fn code(&self) -> &'static str {
        match self {
            StoryboardError::UnknownNode(_) => "unknown_node",
            StoryboardError::DuplicateEdge { .. } => "duplicate_edge",
            StoryboardError::MissingEdge { .. } => "missing_edge",
            StoryboardError::SelfEdge(_) => "self_edge",
        }
    }
}

impl Storyboard {
    pub fn new(description: &str, nodes: Vec<StoryboardNode>) -> Self {
        Self {
            description: description.to_string(),
            entry_node_id: None,
            nodes,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Option<&StoryboardNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.node(id).is_some()
    }

    pub fn node_by_view(&self, view_name: &str) -> Option<&StoryboardNode> {
        self.nodes.iter().find(|n| n.swift_ui_view_name == view_name)
    }

    pub fn ids(&self) -> BTreeSet<NodeId> {
        self.nodes.iter().map(|n| n.id).collect()
    }

    pub fn max_id(&self) -> NodeId {
        self.nodes.iter().map(|n| n.id).max().unwrap_or_default()
    }

    /// The screen shown first: the explicit entry node, else the lowest id.
    pub fn entry(&self) -> Option<NodeId> {
        match self.entry_node_id {
            Some(id) if self.contains(id) => Some(id),
            _ => self.nodes.iter().map(|n| n.id).min(),
        }
    }

    /// All (from, to) pairs, in node order then edge order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.nodes
            .iter()
            .flat_map(|n| n.outgoing_edges.iter().map(move |&to| (n.id, to)))
            .collect()
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.node(from)
            .is_some_and(|n| n.outgoing_edges.contains(&to))
    }

    pub fn incoming(&self, id: NodeId) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.outgoing_edges.contains(&id))
            .map(|n| n.id)
            .collect()
    }

    /// View names of the screens directly reachable from `id`.
    pub fn outgoing_view_names(&self, id: NodeId) -> Vec<&str> {
        let Some(node) = self.node(id) else {
            return Vec::new();
        };
        node.outgoing_edges
            .iter()
            .filter_map(|to| self.node(*to))
            .map(|n| n.swift_ui_view_name.as_str())
            .collect()
    }

    fn node_mut(&mut self, id: NodeId) -> Option<&mut StoryboardNode> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    /// Adds a screen, returning the new storyboard and the allocated id.
    pub fn add_screen(
        &self,
        name: &str,
        description: &str,
        view_name: Option<&str>,
    ) -> (Storyboard, NodeId) {
        let mut next = self.clone();
        let id = NodeId(self.max_id().0 + 1);
        let taken: BTreeSet<&str> = self
            .nodes
            .iter()
            .map(|n| n.swift_ui_view_name.as_str())
            .collect();
        let base = match view_name {
            Some(v) if is_valid_type_identifier(v) => v.to_string(),
            Some(v) => derive_view_name(v),
            None => derive_view_name(name),
        };
        let view = unique_name(&base, |candidate| taken.contains(candidate));
        next.nodes.push(StoryboardNode {
            id,
            name: name.to_string(),
            description: description.to_string(),
            swift_ui_view_name: view,
            outgoing_edges: Vec::new(),
        });
        (next, id)
    }

    /// Ids reachable from `start` along outgoing edges, including `start`.
    pub fn reachable_from(&self, start: NodeId) -> Result<BTreeSet<NodeId>, StoryboardError> {
        reachable_nodes(self, start)
    }

    /// Replaces zero ids with fresh ones, de-duplicates view names and edge
    /// lists. Returns the normalized storyboard and warnings describing each
    /// rewrite. Used when ingesting model output.
    pub fn normalized(&self) -> (Storyboard, ValidationReport) {
        let mut report = ValidationReport::new();
        let mut next = self.clone();
        let mut max = next.max_id().0;
        for (idx, node) in next.nodes.iter_mut().enumerate() {
            if !node.id.is_assigned() {
                max += 1;
                node.id = NodeId(max);
                report.push(Finding::warning(
                    "assigned_id",
                    format!("nodes[{idx}].id"),
                    format!("node '{}' had no id; assigned {}", node.name, node.id),
                ));
            }
        }
        let mut seen_views: BTreeSet<String> = BTreeSet::new();
        for (idx, node) in next.nodes.iter_mut().enumerate() {
            let mut base = node.swift_ui_view_name.clone();
            if !is_valid_type_identifier(&base) {
                base = derive_view_name(if base.trim().is_empty() {
                    &node.name
                } else {
                    &base
                });
            }
            let unique = unique_name(&base, |c| seen_views.contains(c));
            if unique != node.swift_ui_view_name {
                report.push(Finding::warning(
                    "renamed_view",
                    format!("nodes[{idx}].swiftUIViewName"),
                    format!(
                        "view name '{}' renamed to '{}'",
                        node.swift_ui_view_name, unique
                    ),
                ));
                node.swift_ui_view_name = unique.clone();
            }
            seen_views.insert(unique);

            let mut seen_edges = BTreeSet::new();
            let before = node.outgoing_edges.len();
            node.outgoing_edges.retain(|e| seen_edges.insert(*e));
            if node.outgoing_edges.len() != before {
                report.push(Finding::warning(
                    "duplicate_edge",
                    format!("nodes[{idx}].outgoingEdges"),
                    "repeated edge targets removed",
                ));
            }
        }
        (next, report)
    }
}

/// Applies one atom. The result always validates with zero errors when the
/// input did.
pub fn apply_storyboard_change(
    sb: &Storyboard,
    change: &StoryboardChange,
) -> Result<Storyboard, StoryboardError> {
    match change {
        StoryboardChange::AddScreen {
            name,
            description,
            view_name,
        } => Ok(sb.add_screen(name, description, view_name.as_deref()).0),
        StoryboardChange::RemoveScreen(id) => {
            if !sb.contains(*id) {
                return Err(StoryboardError::UnknownNode(*id));
            }
            let mut next = sb.clone();
            next.nodes.retain(|n| n.id != *id);
            for node in &mut next.nodes {
                node.outgoing_edges.retain(|e| e != id);
            }
            if next.entry_node_id == Some(*id) {
                next.entry_node_id = None;
            }
            Ok(next)
        }
        StoryboardChange::AddConnection { from, to } => {
            check_endpoints(sb, *from, *to)?;
            if from == to {
                return Err(StoryboardError::SelfEdge(*from));
            }
            if sb.has_edge(*from, *to) {
                return Err(StoryboardError::DuplicateEdge {
                    from: *from,
                    to: *to,
                });
            }
            let mut next = sb.clone();
            if let Some(node) = next.node_mut(*from) {
                node.outgoing_edges.push(*to);
            }
            Ok(next)
        }
        StoryboardChange::RemoveConnection { from, to } => {
            check_endpoints(sb, *from, *to)?;
            if !sb.has_edge(*from, *to) {
                return Err(StoryboardError::MissingEdge {
                    from: *from,
                    to: *to,
                });
            }
            let mut next = sb.clone();
            if let Some(node) = next.node_mut(*from) {
                node.outgoing_edges.retain(|e| e != to);
            }
            Ok(next)
        }
    }
}

fn check_endpoints(sb: &Storyboard, from: NodeId, to: NodeId) -> Result<(), StoryboardError> {
    if !sb.contains(from) {
        return Err(StoryboardError::UnknownNode(from));
    }
    if !sb.contains(to) {
        return Err(StoryboardError::UnknownNode(to));
    }
    Ok(())
}

/// Transitive closure along outgoing edges from `start`, including `start`.
pub fn reachable_nodes(sb: &Storyboard, start: NodeId) -> Result<BTreeSet<NodeId>, StoryboardError> {
    if !sb.contains(start) {
        return Err(StoryboardError::UnknownNode(start));
    }
    let adjacency: BTreeMap<NodeId, &[NodeId]> = sb
        .nodes
        .iter()
        .map(|n| (n.id, n.outgoing_edges.as_slice()))
        .collect();
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(id) = queue.pop_front() {
        for next in adjacency.get(&id).copied().unwrap_or_default() {
            if adjacency.contains_key(next) && seen.insert(*next) {
                queue.push_back(*next);
            }
        }
    }
    Ok(seen)
}

/// Checks every storyboard and node invariant. Findings are ordered by node
/// id, then code; storyboard-level findings come first.
pub fn validate_storyboard(sb: &Storyboard) -> ValidationReport {
    let mut keyed: Vec<(Option<NodeId>, Finding)> = Vec::new();

    if sb.nodes.is_empty() {
        keyed.push((
            None,
            Finding::warning("empty_storyboard", "nodes", "storyboard has no screens"),
        ));
    }
    if let Some(entry) = sb.entry_node_id {
        if !sb.contains(entry) {
            keyed.push((
                None,
                Finding::error(
                    "unknown_entry_node",
                    "entryNodeId",
                    format!("entry node {entry} does not exist"),
                ),
            ));
        }
    }

    let mut id_counts: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut view_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for node in &sb.nodes {
        *id_counts.entry(node.id).or_default() += 1;
        *view_counts.entry(node.swift_ui_view_name.as_str()).or_default() += 1;
    }

    for (idx, node) in sb.nodes.iter().enumerate() {
        let at = |suffix: &str| format!("nodes[{idx}]{suffix}");
        let key = Some(node.id);
        if !node.id.is_assigned() {
            keyed.push((
                key,
                Finding::error("unassigned_id", at(".id"), "node id 0 is reserved"),
            ));
        }
        if id_counts[&node.id] > 1 {
            keyed.push((
                key,
                Finding::error(
                    "duplicate_id",
                    at(".id"),
                    format!("node id {} is used more than once", node.id),
                ),
            ));
        }
        let view = node.swift_ui_view_name.as_str();
        if view.is_empty() {
            keyed.push((
                key,
                Finding::error("empty_view_name", at(".swiftUIViewName"), "view name is empty"),
            ));
        } else {
            if !is_valid_type_identifier(view) {
                keyed.push((
                    key,
                    Finding::error(
                        "invalid_view_name",
                        at(".swiftUIViewName"),
                        format!("'{view}' is not a valid type identifier"),
                    ),
                ));
            }
            if view_counts[view] > 1 {
                keyed.push((
                    key,
                    Finding::error(
                        "duplicate_view_name",
                        at(".swiftUIViewName"),
                        format!("view name '{view}' is used by more than one node"),
                    ),
                ));
            }
        }
        let mut seen = BTreeSet::new();
        for (edge_idx, target) in node.outgoing_edges.iter().enumerate() {
            let path = at(&format!(".outgoingEdges[{edge_idx}]"));
            if *target == node.id {
                keyed.push((
                    key,
                    Finding::error("self_edge", path.clone(), "node links to itself"),
                ));
            } else if !id_counts.contains_key(target) {
                keyed.push((
                    key,
                    Finding::error(
                        "dangling_edge",
                        path.clone(),
                        format!("edge target {target} does not exist"),
                    ),
                ));
            }
            if !seen.insert(*target) {
                keyed.push((
                    key,
                    Finding::warning(
                        "duplicate_edge",
                        path,
                        format!("edge to {target} is listed more than once"),
                    ),
                ));
            }
        }
    }

    if let Some(entry) = sb.entry() {
        if let Ok(reachable) = reachable_nodes(sb, entry) {
            for (idx, node) in sb.nodes.iter().enumerate() {
                if !reachable.contains(&node.id) {
                    keyed.push((
                        Some(node.id),
                        Finding::warning(
                            "unreachable_screen",
                            format!("nodes[{idx}]"),
                            format!("'{}' cannot be reached from entry node {entry}", node.name),
                        ),
                    ));
                }
            }
        }
    }

    keyed.sort_by(|(a, fa), (b, fb)| a.cmp(b).then_with(|| fa.code.cmp(&fb.code)));
    ValidationReport {
        findings: keyed.into_iter().map(|(_, f)| f).collect(),
    }
}

/// Letters, digits and underscores, not starting with a digit.
pub fn is_valid_type_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// `"Product detail"` -> `"ProductDetailView"`.
pub fn derive_view_name(name: &str) -> String {
    let mut out: String = name
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut cs = w.chars();
            let first = cs.next().map(|c| c.to_ascii_uppercase());
            first.into_iter().chain(cs).collect::<String>()
        })
        .collect();
    if out.is_empty() {
        out.push_str("Screen");
    }
    if out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert_str(0, "Screen");
    }
    if !out.ends_with("View") {
        out.push_str("View");
    }
    out
}

/// Appends `2`, `3`, ... until `taken` rejects the candidate.
pub fn unique_name(base: &str, taken: impl Fn(&str) -> bool) -> String {
    if !taken(base) {
        return base.to_string();
    }
    (2..)
        .map(|n| format!("{base}{n}"))
        .find(|c| !taken(c))
        .expect("unbounded suffix search")
}
