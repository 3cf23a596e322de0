mod common;

use std::collections::BTreeSet;

use athena_core::codegen::{
    export_archive, export_project, validate_navigation_plan, DesignScaffold, GeneratedProject, Manifest,
    NavigationPlan, MANIFEST_FILE,
};
use athena_core::ir::{
    deserialize_ir, serialize_ir, Action, DataEntity, DataModel, ElementKind, GuiSkeleton, SkeletonElement, Storyboard,
    StoryboardNode,
};
use athena_core::llm::{Script, ScriptedProvider, ScriptedResponse, TemplateId};
use athena_core::plan::{Engine, PlanError, Project, Stage};
use common::*;

fn scaffold() -> DesignScaffold {
    DesignScaffold::from_value(fixture_json("appendix/design_system.json")).unwrap()
}

fn shop_storyboard() -> Storyboard {
    deserialize_ir(&fixture("appendix/shop_storyboard.json")).unwrap()
}

fn nav(dest: &str) -> SkeletonElement {
    SkeletonElement::new(ElementKind::Button)
        .attr("Label", dest)
        .with_action(Action::navigate("OnTap", dest))
}

/// The shoe shop with skeletons for all three views and a scaffold.
fn shop_project() -> Project {
    let sb = shop_storyboard();
    let dm = DataModel::new(vec![DataEntity::new(
        "Product",
        "A shoe for sale.",
        vec![
            athena_core::ir::EntityField::new("name", "String"),
            athena_core::ir::EntityField::new("price", "Double"),
        ],
    )]);
    let skels = vec![
        GuiSkeleton::new("HomeView", 1).with_state(&["products"]).with_root(
            SkeletonElement::new(ElementKind::List)
                .attr("DataSource", "products")
                .child(SkeletonElement::new(ElementKind::Text).attr("Value", "product.name"))
                .child(nav("ProductDetailView")),
        ),
        GuiSkeleton::new("ProductDetailView", 2).with_root(
            SkeletonElement::new(ElementKind::VStack)
                .child(SkeletonElement::new(ElementKind::Text).attr("Value", "product.price"))
                .child(nav("PurchaseView"))
                .child(nav("HomeView")),
        ),
        GuiSkeleton::new("PurchaseView", 3)
            .with_root(SkeletonElement::new(ElementKind::Text).attr("Value", "product.name")),
    ];
    let mut project = Project::new(sb, dm, skels);
    project.design_scaffold = Some(scaffold());
    assert!(project.validate().is_ok(), "{}", project.validate());
    project
}

fn filled_codegen() -> serde_json::Value {
    fixture_json("appendix/view_generation_filled.json")
}

fn codegen_provider(bodies: Vec<serde_json::Value>) -> ScriptedProvider {
    ScriptedProvider::new(
        bodies
            .into_iter()
            .map(|b| ScriptedResponse::for_template(TemplateId::CodeGen, b.to_string()))
            .collect(),
    )
    .unwrap()
}

#[test]
fn appendix_scaffold_parses_with_its_colors() {
    let s = scaffold();
    assert_eq!(s.colors.primary, "#F0F0F0");
    assert_eq!(s.colors.accent, "#FF5733");
}

#[test]
fn named_color_is_repaired_by_one_reprompt() {
    let mut bad = fixture_json("appendix/design_system.json");
    bad["colors"]["secondary"] = "green".into();
    let provider = ScriptedProvider::new(vec![
        ScriptedResponse::for_template(TemplateId::DesignScaffold, bad.to_string()),
        ScriptedResponse::for_template(TemplateId::DesignScaffold, fixture("appendix/design_system.json")),
    ])
    .unwrap();
    let (s, step) = Engine::new(&provider).generate_design_scaffold("a shoe shop").unwrap();
    assert_eq!(s, scaffold());
    assert_eq!(step.stage, Stage::DesignScaffold);
    assert_eq!(step.responses.len(), 2);
    assert!(provider.calls()[1].messages.last().unwrap().content.contains("invalid_color"));

    // Same script, same scaffold.
    let again = ScriptedProvider::new(vec![ScriptedResponse::any(fixture("appendix/design_system.json"))]).unwrap();
    let (s2, _) = Engine::new(&again).generate_design_scaffold("a shoe shop").unwrap();
    assert_eq!(serde_json::to_string(&s).unwrap(), serde_json::to_string(&s2).unwrap());
}

#[test]
fn navigation_plans_follow_storyboard_edges() {
    let sb = Storyboard::new(
        "",
        vec![
            StoryboardNode::new(1, "Home", "HomeView").with_edges([2]),
            StoryboardNode::new(2, "Product Detail", "ProductDetailView").with_edges([3]),
            StoryboardNode::new(3, "Write Review", "WriteReviewView"),
        ],
    );
    let plan = NavigationPlan::from_value(fixture_json("appendix/navigation_plan.json"), &sb).unwrap();
    assert_eq!(plan.transition_count(), 1);
    assert!(validate_navigation_plan(&plan, &sb).is_ok());

    // Home has no edge to WriteReviewView.
    let mut off_edge = fixture_json("appendix/navigation_plan.json");
    off_edge["views"][0]["swiftUIViewName"] = "HomeView".into();
    let err = NavigationPlan::from_value(off_edge.clone(), &sb).unwrap_err();
    assert!(err.has_code("plan_edge_mismatch"), "{err}");

    let provider = ScriptedProvider::new(vec![
        ScriptedResponse::for_template(TemplateId::NavigationPlan, off_edge.to_string()),
        ScriptedResponse::for_template(TemplateId::NavigationPlan, off_edge.to_string()),
    ])
    .unwrap();
    let err = Engine::new(&provider).generate_navigation_plan(&sb, &DataModel::default()).unwrap_err();
    assert!(err.report().is_some_and(|r| r.has_code("plan_edge_mismatch")), "{err}");

    let flat = Storyboard::new("", vec![StoryboardNode::new(1, "Home", "HomeView")]);
    let provider = ScriptedProvider::new(vec![ScriptedResponse::any("{\"views\": []}")]).unwrap();
    let (plan, _) = Engine::new(&provider).generate_navigation_plan(&flat, &DataModel::default()).unwrap();
    assert_eq!(plan.transition_count(), 0);
}

#[test]
fn appendix_codegen_yields_three_views_and_a_utility() {
    let project = shop_project();
    let provider = codegen_provider(vec![filled_codegen()]);
    let (gp, steps) = Engine::new(&provider).generate_code(&project).unwrap();
    let names: Vec<&str> = gp.views.iter().map(|v| v.swift_ui_view_name.as_str()).collect();
    assert_eq!(names, ["HomeView", "ProductDetailView", "PurchaseView"]);
    // The purchase view's id comes from the storyboard, not the response.
    assert_eq!(gp.views[2].id.0, 3);
    assert_eq!(gp.utilities.len(), 1);
    assert_eq!(gp.utilities[0].name, "Color+Extension");
    assert_eq!(gp.scaffold_used.as_ref(), project.design_scaffold.as_ref());
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0].stage, Stage::Codegen);
}

#[test]
fn missing_view_is_codegen_invalid_after_one_reprompt() {
    let mut partial = filled_codegen();
    partial["views"].as_array_mut().unwrap().pop();
    let provider = codegen_provider(vec![partial.clone(), partial]);
    let err = Engine::new(&provider).generate_code(&shop_project()).unwrap_err();
    assert_eq!(err.code(), "codegen_invalid");
    let report = err.report().unwrap();
    assert!(report.findings.iter().any(|f| f.message.contains("missing_view(PurchaseView)")), "{report}");
    assert_eq!(provider.calls().len(), 2);

    let mut renamed = filled_codegen();
    let code = renamed["views"][2]["viewCode"].as_str().unwrap().replace("struct PurchaseView", "struct CheckoutView");
    renamed["views"][2]["viewCode"] = code.into();
    let provider = codegen_provider(vec![renamed.clone(), renamed]);
    let err = Engine::new(&provider).generate_code(&shop_project()).unwrap_err();
    assert!(err.report().unwrap().has_code("type_name_mismatch"));
}

#[test]
fn codegen_needs_a_scaffold() {
    let mut project = shop_project();
    project.design_scaffold = None;
    let provider = codegen_provider(vec![filled_codegen()]);
    let err = Engine::new(&provider).generate_code(&project).unwrap_err();
    assert!(err.report().unwrap().has_code("missing_scaffold"));
    assert!(provider.calls().is_empty());
}

/// Relative paths of all regular files under `dir`.
fn files_under(dir: &std::path::Path) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/"));
            }
        }
    }
    out
}

#[test]
fn export_layout_and_manifest() {
    let project = shop_project();
    let gp = GeneratedProject::from_response(filled_codegen(), &project.storyboard).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = export_project(&gp, &project.data_model, "ShoeShop", dir.path()).unwrap();
    let expected: BTreeSet<String> = [
        "ShoeShop/Sources/Views/HomeView.swift",
        "ShoeShop/Sources/Views/ProductDetailView.swift",
        "ShoeShop/Sources/Views/PurchaseView.swift",
        "ShoeShop/Sources/Models/Product.swift",
        "ShoeShop/Sources/Utilities/Color+Extension.swift",
        MANIFEST_FILE,
    ]
    .into_iter()
    .map(String::from)
    .collect();
    assert_eq!(files_under(dir.path()), expected);
    assert_eq!(manifest.files.len(), 5);

    let on_disk: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(on_disk, manifest);
    for entry in &manifest.files {
        let bytes = std::fs::read(dir.path().join(&entry.path)).unwrap();
        assert_eq!(bytes.len() as u64, entry.bytes, "{}", entry.path);
    }
    let again = export_project(&gp, &project.data_model, "ShoeShop", dir.path()).unwrap();
    assert_eq!(again, manifest);

    // Line count oracle: newline-terminated lines of views and utilities.
    let oracle: usize = gp
        .views
        .iter()
        .map(|v| v.view_code.matches('\n').count())
        .chain(gp.utilities.iter().map(|u| u.code.matches('\n').count()))
        .sum();
    assert_eq!(gp.metrics.lines_of_code, oracle);
    assert_eq!(gp.metrics.view_count, 3);
}

#[test]
fn empty_project_still_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = export_project(&GeneratedProject::default(), &DataModel::default(), "Empty", dir.path()).unwrap();
    assert!(manifest.files.is_empty());
    assert_eq!(files_under(dir.path()), BTreeSet::from([MANIFEST_FILE.to_string()]));
}

#[test]
fn archives_are_byte_identical() {
    let project = shop_project();
    let gp = GeneratedProject::from_response(filled_codegen(), &project.storyboard).unwrap();
    let a = export_archive(&gp, &project.data_model, "ShoeShop").unwrap();
    let b = export_archive(&gp, &project.data_model, "ShoeShop").unwrap();
    assert_eq!(a, b);
    assert_eq!(&a[..2], b"PK");
}

fn finance_provider() -> ScriptedProvider {
    ScriptedProvider::from_script(Script::load(&fixture_path("finance/script.json")).unwrap()).unwrap()
}

const FINANCE: &str =
    "I want to build a finance management app tailored specifically for informal community savings groups.";

#[test]
fn finance_prompt_then_sign_up() {
    let provider = finance_provider();
    let engine = Engine::new(&provider);
    let (project, steps) = engine.initial_generate(FINANCE).unwrap();
    assert!(project.storyboard.nodes.len() >= 5);
    assert!(project.validate().is_ok());
    assert_eq!(project.skeletons.len(), project.storyboard.nodes.len());
    let stages: Vec<Stage> = steps.iter().map(|s| s.stage).collect();
    assert_eq!(&stages[..4], [Stage::Storyboard, Stage::DesignScaffold, Stage::DataModel, Stage::NavigationPlan]);
    assert!(stages[4..].iter().all(|s| *s == Stage::Skeleton));

    let (next, _) = engine.apply_request("Please add sign up to the flow", &project).unwrap();
    let sign_up = next.storyboard.node_by_view("SignUpView").expect("sign-up screen");
    let welcome = next.storyboard.node_by_view("WelcomeView").unwrap();
    assert!(welcome.outgoing_edges.contains(&sign_up.id));
    assert!(next.validate().is_ok(), "{}", next.validate());
    // Screens the request did not touch keep their skeletons verbatim.
    let groups = project.storyboard.node_by_view("GroupDetailView").unwrap().id;
    assert_eq!(serialize_ir(&project.skeletons[&groups]), serialize_ir(&next.skeletons[&groups]));

    let (gp, _) = engine.generate_code(&next).unwrap();
    assert_eq!(gp.metrics.view_count, next.storyboard.nodes.len());
    assert_eq!(provider.remaining(), 0);
}

#[test]
fn initial_generation_is_deterministic_and_rejects_blank_requests() {
    let a = Engine::new(&finance_provider()).initial_generate(FINANCE).unwrap().0;
    let b = Engine::new(&finance_provider()).initial_generate(FINANCE).unwrap().0;
    assert!(a.same_ir(&b));
    let err = Engine::new(&finance_provider()).initial_generate("  \n ").map(|_| ()).unwrap_err();
    assert!(matches!(err, PlanError::EmptyRequest));
}
