#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use athena_core::ir::{
    apply_storyboard_change, serialize_ir, Action, DataEntity, DataModel, ElementKind, EntityField, GuiSkeleton,
    NodeId, SkeletonElement, Storyboard, StoryboardChange, StoryboardNode,
};
use athena_core::llm::{ScriptedResponse, TemplateId};
use athena_core::plan::{ChangePlan, Connection, FileRef, Project, ScreenRef};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures")).join(rel)
}

pub fn fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn fixture_json(rel: &str) -> serde_json::Value {
    serde_json::from_str(&fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

const WORDS: &[&str] = &[
    "Home", "Detail", "Settings", "Profile", "Cart", "Search", "Feed", "Player", "Library", "Login", "Checkout",
    "Inbox", "Board", "Map", "Stats", "Editor",
];

/// Random storyboard with ids 1..=n, unique view names and no self edges.
pub fn random_storyboard(rng: &mut StdRng, n: usize, edge_p: f64) -> Storyboard {
    let mut words: Vec<&str> = WORDS.to_vec();
    words.shuffle(rng);
    let mut nodes = Vec::new();
    for i in 0..n {
        let word = words[i % words.len()];
        let name = if i < words.len() { word.to_string() } else { format!("{word} {i}") };
        let view = format!("{}View", name.replace(' ', ""));
        nodes.push(StoryboardNode::new(i as u32 + 1, &name, &view).with_description(&format!("The {name} screen.")));
    }
    for from in 1..=n as u32 {
        let edges: Vec<u32> = (1..=n as u32).filter(|&to| to != from && rng.gen_bool(edge_p)).collect();
        nodes[from as usize - 1].outgoing_edges = edges.into_iter().map(NodeId).collect();
    }
    let mut sb = Storyboard::new("Generated storyboard.", nodes);
    if n > 0 && rng.gen_bool(0.5) {
        sb.entry_node_id = Some(NodeId(rng.gen_range(1..=n as u32)));
    }
    sb
}

const TYPES: &[&str] = &["String", "Int", "Double", "Bool", "Date", "URL"];

/// Entities `Item0..`, each with a few scalar fields and, sometimes, a field
/// typed by an earlier entity.
pub fn random_data_model(rng: &mut StdRng, count: usize) -> DataModel {
    let mut entities: Vec<DataEntity> = Vec::new();
    for i in 0..count {
        let mut fields = vec![EntityField::new("id", "UUID"), EntityField::new("title", "String")];
        for j in 0..rng.gen_range(0..4) {
            fields.push(EntityField::new(&format!("field{j}"), TYPES.choose(rng).unwrap()));
        }
        if i > 0 && rng.gen_bool(0.5) {
            let target = &entities[rng.gen_range(0..i)].name;
            let ty = if rng.gen_bool(0.5) { format!("[{target}]") } else { format!("{target}?") };
            fields.push(EntityField::new("related", &ty));
        }
        entities.push(DataEntity::new(&format!("Item{i}"), &format!("Entity number {i}."), fields));
    }
    DataModel::new(entities)
}

/// A skeleton for `node` whose Navigate records follow the node's edges and
/// whose data references resolve in `dm`.
pub fn random_skeleton(rng: &mut StdRng, sb: &Storyboard, node: &StoryboardNode, dm: &DataModel) -> GuiSkeleton {
    let mut root = SkeletonElement::new(ElementKind::MainContainer);
    root = root.child(SkeletonElement::new(ElementKind::Text).attr("Value", &node.name));
    let mut state = Vec::new();
    if let Some(entity) = dm.entities.choose(rng) {
        let instance = entity.name.to_ascii_lowercase();
        let list_name = format!("{instance}s");
        state.push(list_name.clone());
        let row = SkeletonElement::new(ElementKind::HStack)
            .child(SkeletonElement::new(ElementKind::Text).attr("Value", &format!("{instance}.title")));
        root = root.child(SkeletonElement::new(ElementKind::List).attr("DataSource", &list_name).child(row));
    }
    for (i, target) in node.outgoing_edges.iter().enumerate() {
        let dest = &sb.node(*target).expect("edge target").swift_ui_view_name;
        let mut button = SkeletonElement::new(ElementKind::Button)
            .attr("Label", &format!("Open {i}"))
            .with_action(Action::navigate("OnTap", dest));
        if rng.gen_bool(0.3) {
            button = button.attr("Style", "primary");
        }
        root = root.child(button);
    }
    if rng.gen_bool(0.5) {
        root = root.child(
            SkeletonElement::new(ElementKind::Button)
                .attr("Label", "Refresh")
                .with_action(Action::describe("OnTap", "Reloads the content")),
        );
    }
    if rng.gen_bool(0.3) {
        root = root.child(SkeletonElement::new(ElementKind::Custom("RatingStars".into())).attr("Count", "5"));
    }
    let refs: Vec<&str> = state.iter().map(String::as_str).collect();
    GuiSkeleton::new(&node.swift_ui_view_name, node.id)
        .with_state(&refs)
        .with_root(root)
}

/// A project that validates with zero errors.
pub fn random_project(rng: &mut StdRng, max_nodes: usize) -> Project {
    let n = rng.gen_range(1..=max_nodes);
    let sb = random_storyboard(rng, n, 0.3);
    let entities = rng.gen_range(1..4);
    let dm = random_data_model(rng, entities);
    let skels: Vec<GuiSkeleton> = sb.nodes.iter().map(|node| random_skeleton(rng, &sb, node, &dm)).collect();
    let project = Project::new(sb, dm, skels);
    let report = project.validate();
    assert!(report.is_ok(), "generator produced an invalid project:\n{report}");
    project
}

/// Adjacency sets keyed by node id.
pub fn adjacency(sb: &Storyboard) -> BTreeMap<u32, std::collections::BTreeSet<u32>> {
    sb.nodes
        .iter()
        .map(|n| (n.id.0, n.outgoing_edges.iter().map(|e| e.0).collect()))
        .collect()
}

/// Nodes 50 (OldSettingsView, edge to 51), 51 and 102, as the appendix plan
/// response assumes. Node 102 has a skeleton only when asked for.
pub fn appendix_project(with_102_skeleton: bool) -> Project {
    let sb = Storyboard::new(
        "Account settings.",
        vec![
            StoryboardNode::new(50, "Old Settings", "OldSettingsView").with_edges([51]),
            StoryboardNode::new(51, "Settings Detail", "SettingsDetailView"),
            StoryboardNode::new(102, "User Details", "UserDetailsView"),
        ],
    );
    let dm = DataModel::new(vec![DataEntity::new(
        "Setting",
        "A user preference.",
        vec![EntityField::new("key", "String"), EntityField::new("value", "String")],
    )]);
    let mut skels = vec![
        GuiSkeleton::new("OldSettingsView", 50).with_root(
            SkeletonElement::new(ElementKind::VStack).child(
                SkeletonElement::new(ElementKind::Button)
                    .attr("Label", "Details")
                    .with_action(Action::navigate("OnTap", "SettingsDetailView")),
            ),
        ),
        GuiSkeleton::new("SettingsDetailView", 51)
            .with_root(SkeletonElement::new(ElementKind::Text).attr("Value", "setting.value")),
    ];
    if with_102_skeleton {
        skels.push(
            GuiSkeleton::new("UserDetailsView", 102)
                .with_root(SkeletonElement::new(ElementKind::Text).attr("Value", "User details")),
        );
    }
    Project::new(sb, dm, skels)
}

pub fn appendix_plan_text() -> String {
    fixture("appendix/plan_response.json")
}

/// Stage responses for executing the appendix plan on `appendix_project`.
pub fn appendix_stage_responses() -> Vec<athena_core::llm::ScriptedResponse> {
    use athena_core::ir::serialize_ir;
    use athena_core::llm::{ScriptedResponse, TemplateId};
    let storyboard = serde_json::json!({
        "storyboard": {
            "nodes": [{
                "id": 103,
                "name": "User Profile",
                "description": "Shows the signed-in user's profile and age.",
                "swiftUIViewName": "UserProfileView",
                "outgoingEdges": [102]
            }]
        }
    });
    let dm = DataModel::new(vec![
        DataEntity::new(
            "Setting",
            "A user preference.",
            vec![EntityField::new("key", "String"), EntityField::new("value", "String")],
        ),
        DataEntity::new(
            "User",
            "A registered user.",
            vec![EntityField::new("name", "String"), EntityField::new("age", "Int")],
        ),
    ]);
    let profile = GuiSkeleton::new("UserProfileView", 103).with_state(&["user"]).with_root(
        SkeletonElement::new(ElementKind::VStack)
            .child(SkeletonElement::new(ElementKind::Text).attr("Value", "user.name"))
            .child(SkeletonElement::new(ElementKind::Text).attr("Value", "user.age"))
            .child(
                SkeletonElement::new(ElementKind::Button)
                    .attr("Label", "Details")
                    .with_action(Action::navigate("OnTap", "UserDetailsView")),
            ),
    );
    let details = GuiSkeleton::new("UserDetailsView", 102)
        .with_root(SkeletonElement::new(ElementKind::Text).attr("Value", "user.name"));
    vec![
        ScriptedResponse::for_template(TemplateId::StoryboardMod, storyboard.to_string()),
        ScriptedResponse::for_template(TemplateId::DataModelMod, serialize_ir(&dm)),
        ScriptedResponse::for_target(TemplateId::SkeletonMod, "UserProfileView", serialize_ir(&profile)),
        ScriptedResponse::for_target(TemplateId::SkeletonMod, "UserDetailsView", serialize_ir(&details)),
    ]
}

/// A random plan touching all three IRs, the scripted responses that carry
/// it out, and the adjacency the storyboard must end with.
pub struct Scenario {
    pub plan: ChangePlan,
    pub responses: Vec<ScriptedResponse>,
    pub expected_edges: BTreeSet<(NodeId, NodeId)>,
    pub added_views: Vec<String>,
    pub removed: Option<NodeId>,
}

pub fn scenario(rng: &mut StdRng, project: &Project) -> Scenario {
    let sb = &project.storyboard;
    let mut plan = ChangePlan::default();
    let mut local = sb.clone();

    let removed = if sb.nodes.len() > 2 && rng.gen_bool(0.4) {
        let node = sb.nodes.choose(rng).unwrap();
        plan.storyboard_changes.remove_screens.push(ScreenRef::new(node.id.0, &node.name));
        plan.gui_skeleton_changes
            .files_to_delete
            .push(FileRef::new(&node.swift_ui_view_name, node.id.0));
        Some(node.id)
    } else {
        None
    };
    let survivors: Vec<NodeId> = sb.nodes.iter().map(|n| n.id).filter(|id| Some(*id) != removed).collect();

    // Remove up to one surviving edge.
    let edges: Vec<(NodeId, NodeId)> = sb
        .edges()
        .into_iter()
        .filter(|(a, b)| survivors.contains(a) && survivors.contains(b))
        .collect();
    if let Some(&(a, b)) = edges.choose(rng) {
        if rng.gen_bool(0.5) {
            plan.storyboard_changes.remove_connections.push(Connection { from: a, to: b });
        }
    }
    for c in &plan.storyboard_changes.remove_connections {
        local = apply_storyboard_change(&local, &StoryboardChange::RemoveConnection { from: c.from, to: c.to }).unwrap();
    }
    if let Some(id) = removed {
        local = apply_storyboard_change(&local, &StoryboardChange::RemoveScreen(id)).unwrap();
    }

    // Added screens use plan-local ids above every existing id.
    let mut plan_ids = Vec::new();
    let mut added_views = Vec::new();
    let mut id_map = BTreeMap::new();
    let saturated = survivors
        .iter()
        .all(|a| survivors.iter().all(|b| a == b || local.has_edge(*a, *b)));
    let min_added = u32::from(survivors.len() < 2 || saturated);
    for k in 0..rng.gen_range(min_added..=2u32) {
        let plan_id = sb.max_id().0 + 100 + k;
        let name = format!("Extra Screen {k}");
        let view = format!("ExtraScreen{k}View");
        plan.storyboard_changes.add_screens.push(ScreenRef::new(plan_id, &name));
        plan.gui_skeleton_changes.new_files_to_create.push(FileRef::new(&view, plan_id));
        let (mut next, mut id) = local.add_screen(&name, "", Some(&view));
        let floor = sb.max_id().0.max(local.max_id().0);
        if id.0 <= floor {
            next.nodes.last_mut().unwrap().id = NodeId(floor + 1);
            id = NodeId(floor + 1);
        }
        local = next;
        id_map.insert(NodeId(plan_id), id);
        plan_ids.push(NodeId(plan_id));
        added_views.push(view);
    }

    // At least one new connection so the storyboard always changes.
    let endpoints: Vec<NodeId> = survivors.iter().copied().chain(plan_ids.iter().copied()).collect();
    let map = |id: NodeId| id_map.get(&id).copied().unwrap_or(id);
    for attempt in 0..20 {
        let a = *endpoints.choose(rng).unwrap();
        let b = *endpoints.choose(rng).unwrap();
        let c = Connection { from: a, to: b };
        if a == b || local.has_edge(map(a), map(b)) || plan.storyboard_changes.add_connections.contains(&c) {
            continue;
        }
        plan.storyboard_changes.add_connections.push(c);
        local = apply_storyboard_change(&local, &StoryboardChange::AddConnection { from: map(a), to: map(b) }).unwrap();
        if attempt > 0 && rng.gen_bool(0.5) {
            break;
        }
    }
    let expected_edges: BTreeSet<_> = local.edges().into_iter().collect();

    // Data model: a fresh set of entities; skeletons referring to dropped
    // entities become invalid and must be regenerated.
    plan.data_model_changes.files_to_modify.push(FileRef::new("Item0", 0));
    let count = rng.gen_range(1..4);
    let dm = random_data_model(rng, count);

    // Skeletons: modify one surviving screen besides whatever the cascade adds.
    let touched = survivors.choose(rng).unwrap();
    let touched_view = sb.node(*touched).unwrap().swift_ui_view_name.clone();
    plan.gui_skeleton_changes.files_to_modify.push(FileRef::new(&touched_view, touched.0));
    plan.technical_description.summary = "randomized change".into();

    let mut responses = Vec::new();
    let storyboard_body = serde_json::json!({ "storyboard": serde_json::to_value(&local).unwrap() });
    responses.push(ScriptedResponse::for_template(TemplateId::StoryboardMod, storyboard_body.to_string()));
    responses.push(ScriptedResponse::for_template(TemplateId::DataModelMod, serialize_ir(&dm)));
    for node in &local.nodes {
        let skel = random_skeleton(rng, &local, node, &dm);
        responses.push(ScriptedResponse::for_target(
            TemplateId::SkeletonMod,
            &node.swift_ui_view_name,
            serialize_ir(&skel),
        ));
    }
    Scenario {
        plan,
        responses,
        expected_edges,
        added_views,
        removed,
    }
}

/// Four existing screens whose skeletons the plan rewrites.
pub fn four_screen_case(delay_ms: u64) -> (Project, ChangePlan, Vec<ScriptedResponse>) {
    let mut rng = StdRng::seed_from_u64(77);
    let sb = random_storyboard(&mut rng, 4, 0.5);
    let dm = random_data_model(&mut rng, 2);
    let skels: Vec<GuiSkeleton> = sb.nodes.iter().map(|n| random_skeleton(&mut rng, &sb, n, &dm)).collect();
    let project = Project::new(sb.clone(), dm.clone(), skels);
    let mut plan = ChangePlan::default();
    let mut responses = Vec::new();
    for node in &sb.nodes {
        plan.gui_skeleton_changes
            .files_to_modify
            .push(FileRef::new(&node.swift_ui_view_name, node.id.0));
        let skel = random_skeleton(&mut rng, &sb, node, &dm);
        responses.push(
            ScriptedResponse::for_target(TemplateId::SkeletonMod, &node.swift_ui_view_name, serialize_ir(&skel))
                .with_delay(delay_ms),
        );
    }
    (project, plan, responses)
}

pub fn serialize_state(p: &Project) -> String {
    let mut out = serialize_ir(&p.storyboard) + &serialize_ir(&p.data_model);
    for s in p.skeletons.values() {
        out += &serialize_ir(s);
    }
    out + &p.history.len().to_string()
}

/// Applies one atom to plain adjacency sets, independently of the library.
pub fn oracle_apply(adj: &mut BTreeMap<u32, BTreeSet<u32>>, change: &StoryboardChange) -> Result<(), &'static str> {
    match change {
        StoryboardChange::AddScreen { .. } => {
            let id = adj.keys().next_back().map_or(1, |m| m + 1);
            adj.insert(id, BTreeSet::new());
        }
        StoryboardChange::RemoveScreen(id) => {
            if adj.remove(&id.0).is_none() {
                return Err("unknown_node");
            }
            for targets in adj.values_mut() {
                targets.remove(&id.0);
            }
        }
        StoryboardChange::AddConnection { from, to } => {
            if !adj.contains_key(&from.0) || !adj.contains_key(&to.0) {
                return Err("unknown_node");
            }
            if from == to {
                return Err("self_edge");
            }
            if !adj.get_mut(&from.0).unwrap().insert(to.0) {
                return Err("duplicate_edge");
            }
        }
        StoryboardChange::RemoveConnection { from, to } => {
            if !adj.contains_key(&from.0) || !adj.contains_key(&to.0) {
                return Err("unknown_node");
            }
            if !adj.get_mut(&from.0).unwrap().remove(&to.0) {
                return Err("missing_edge");
            }
        }
    }
    Ok(())
}

pub fn random_atom(rng: &mut StdRng, max_id: u32) -> StoryboardChange {
    let pick = |rng: &mut StdRng| NodeId(rng.gen_range(1..=max_id + 1));
    match rng.gen_range(0..10) {
        0 => StoryboardChange::AddScreen {
            name: format!("Screen {}", rng.gen_range(0..100)),
            description: String::new(),
            view_name: None,
        },
        1 => StoryboardChange::RemoveScreen(pick(rng)),
        2..=6 => StoryboardChange::AddConnection {
            from: pick(rng),
            to: pick(rng),
        },
        _ => StoryboardChange::RemoveConnection {
            from: pick(rng),
            to: pick(rng),
        },
    }
}
