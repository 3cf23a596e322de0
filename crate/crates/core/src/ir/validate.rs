//! Cross-IR checks: skeleton coverage, navigation targets, data references.

use std::collections::{BTreeMap, BTreeSet};

use super::data_model::{validate_data_model, DataModel};
use super::skeleton::{validate_skeleton, GuiSkeleton};
use super::storyboard::{validate_storyboard, NodeId, Storyboard};
use crate::report::{Finding, ValidationReport};

fn prefixed(report: ValidationReport, prefix: &str) -> ValidationReport {
    ValidationReport {
        findings: report
            .findings
            .into_iter()
            .map(|mut f| {
                f.path = if f.path.is_empty() {
                    prefix.trim_end_matches('.').to_string()
                } else {
                    format!("{prefix}{}", f.path)
                };
                f
            })
            .collect(),
    }
}

/// Per-IR findings for all three IRs followed by the cross-IR findings.
pub fn validate_project<'a>(
    sb: &Storyboard,
    dm: &DataModel,
    skels: impl IntoIterator<Item = &'a GuiSkeleton>,
) -> ValidationReport {
    let skels: Vec<&GuiSkeleton> = skels.into_iter().collect();
    let mut report = prefixed(validate_storyboard(sb), "storyboard.");
    report.extend(prefixed(validate_data_model(dm), "dataModel."));

    let mut by_node: BTreeMap<NodeId, &GuiSkeleton> = BTreeMap::new();
    for skel in &skels {
        let prefix = format!("skeletons[{}].", skel.view_name);
        report.extend(validate_skeleton(skel, &prefix));
        if by_node.insert(skel.node_id, skel).is_some() {
            report.push(Finding::error(
                "duplicate_skeleton",
                format!("{prefix}id"),
                format!("more than one skeleton for node {}", skel.node_id),
            ));
        }
        let Some(node) = sb.node(skel.node_id) else {
            report.push(Finding::error(
                "orphan_skeleton",
                format!("{prefix}id"),
                format!("node {} is not in the storyboard", skel.node_id),
            ));
            continue;
        };
        if node.swift_ui_view_name != skel.view_name {
            report.push(Finding::error(
                "skeleton_view_mismatch",
                format!("{prefix}viewName"),
                format!(
                    "node {} is named '{}' in the storyboard",
                    node.id, node.swift_ui_view_name
                ),
            ));
        }
        let adjacent: BTreeSet<&str> = sb.outgoing_view_names(node.id).into_iter().collect();
        for (path, destination) in skel.navigates() {
            if sb.node_by_view(destination).is_none() {
                report.push(Finding::error(
                    "unknown_destination",
                    format!("{prefix}{path}"),
                    format!("'{destination}' is not a storyboard view"),
                ));
            } else if !adjacent.contains(destination) {
                report.push(Finding::error(
                    "destination_not_adjacent",
                    format!("{prefix}{path}"),
                    format!(
                        "'{}' has no storyboard edge to '{destination}'",
                        node.swift_ui_view_name
                    ),
                ));
            }
        }
        for (path, reference) in skel.data_refs() {
            if let Err(why) = dm.resolve(reference) {
                report.push(Finding::error(
                    "unresolved_data_ref",
                    format!("{prefix}{path}"),
                    format!("'{reference}': {why}"),
                ));
            }
        }
    }

    for (idx, node) in sb.nodes.iter().enumerate() {
        let Some(skel) = by_node.get(&node.id) else {
            report.push(Finding::error(
                "missing_skeleton",
                format!("storyboard.nodes[{idx}]"),
                format!("no skeleton for '{}'", node.swift_ui_view_name),
            ));
            continue;
        };
        let navigated: BTreeSet<&str> = skel.navigates().into_iter().map(|(_, d)| d).collect();
        for (edge_idx, target) in node.outgoing_edges.iter().enumerate() {
            let Some(target_node) = sb.node(*target) else {
                continue;
            };
            if !navigated.contains(target_node.swift_ui_view_name.as_str()) {
                report.push(Finding::warning(
                    "edge_without_nav",
                    format!("storyboard.nodes[{idx}].outgoingEdges[{edge_idx}]"),
                    format!(
                        "'{}' never navigates to '{}'",
                        node.swift_ui_view_name, target_node.swift_ui_view_name
                    ),
                ));
            }
        }
    }
    report
}
