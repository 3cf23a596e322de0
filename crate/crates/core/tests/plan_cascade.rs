mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use athena_core::ir::{
    apply_storyboard_change, NodeId, StoryboardChange,
};
use athena_core::llm::{ScriptedProvider, ScriptedResponse, TemplateId};
use athena_core::plan::{
    diff_project, plan_request, validate_plan, ChangePlan, Connection, Engine, EngineOptions, ExecutedStep, FileRef, ScreenRef, Stage,
};
use common::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn appendix_plan() -> ChangePlan {
    ChangePlan::from_value(serde_json::from_str(&appendix_plan_text()).unwrap()).unwrap()
}

/// Position of a stage in the cascade; stages outside it rank last.
fn rank(stage: Stage) -> u8 {
    match stage {
        Stage::Plan => 0,
        Stage::Storyboard => 1,
        Stage::DataModel => 2,
        Stage::Skeleton => 3,
        _ => 4,
    }
}

fn assert_cascade(steps: &[ExecutedStep]) {
    let ranks: Vec<u8> = steps.iter().map(|s| rank(s.stage)).collect();
    assert!(ranks.windows(2).all(|w| w[0] <= w[1]), "out of order: {ranks:?}");
}

#[test]
fn appendix_plan_validates_against_fixture() {
    let plan = appendix_plan();
    assert_eq!(plan.storyboard_changes.add_screens[0].id, NodeId(101));
    let report = validate_plan(&plan, &appendix_project(false));
    assert_eq!(report.error_count(), 0, "{report}");
}

#[test]
fn removing_an_absent_screen_is_unknown_node() {
    let plan = appendix_plan();
    let mut project = appendix_project(false);
    project.storyboard.nodes.retain(|n| n.id != NodeId(50));
    project.skeletons.remove(&NodeId(50));
    let report = validate_plan(&plan, &project);
    assert!(report.with_code("unknown_node").next().is_some(), "{report}");
}

#[test]
fn dropping_a_delete_entry_breaks_closure() {
    let mut plan = appendix_plan();
    plan.gui_skeleton_changes.files_to_delete.clear();
    let report = validate_plan(&plan, &appendix_project(false));
    let codes: Vec<&str> = report.errors().map(|f| f.code.as_str()).collect();
    assert_eq!(codes, vec!["closure_violation"], "{report}");
}

#[test]
fn plan_request_returns_the_appendix_plan() {
    let provider = ScriptedProvider::new(vec![ScriptedResponse::for_template(TemplateId::Plan, appendix_plan_text())])
        .unwrap();
    let plan = plan_request(
        "add a user profile screen reachable from settings detail",
        &appendix_project(true),
        &provider,
    )
    .unwrap();
    let sc = &plan.storyboard_changes;
    assert_eq!(sc.add_screens.len(), 1);
    assert_eq!(sc.add_screens[0].intended_view_name(), "UserProfileView");
    assert_eq!(sc.add_screens[0].id, NodeId(101));
    assert_eq!(sc.add_connections, vec![Connection::new(101, 102)]);
    assert!(provider.calls()[0].prompt_text().contains("add a user profile screen"));
}

#[test]
fn empty_request_never_reaches_the_provider() {
    let provider = ScriptedProvider::new(vec![ScriptedResponse::any("{}")]).unwrap();
    let err = plan_request("   ", &appendix_project(true), &provider).unwrap_err();
    assert_eq!(err.code(), "empty_request");
    assert!(provider.calls().is_empty());
}

#[test]
fn create_delete_conflict_is_plan_invalid() {
    let plan = serde_json::json!({
        "storyboardChanges": {"addScreens": [{"id": 900, "name": "Foo", "swiftUIViewName": "FooView"}]},
        "guiSkeletonChanges": {
            "newFilesToCreate": [{"swiftUIViewName": "FooView", "id": 0}],
            "filesToDelete": [{"swiftUIViewName": "FooView", "id": 0}]
        }
    });
    // The same bad plan twice: the original and the one repair attempt.
    let provider = ScriptedProvider::new(vec![
        ScriptedResponse::for_template(TemplateId::Plan, plan.to_string()),
        ScriptedResponse::for_template(TemplateId::Plan, plan.to_string()),
    ])
    .unwrap();
    let err = plan_request("make FooView", &appendix_project(true), &provider).unwrap_err();
    assert_eq!(err.code(), "plan_invalid");
    assert!(err.report().unwrap().has_code("create_delete_conflict"), "{err}");
    assert_eq!(provider.calls().len(), 2);
}

#[test]
fn appendix_plan_executes_in_cascade_order() {
    let before = appendix_project(false);
    let provider = ScriptedProvider::new(appendix_stage_responses()).unwrap();
    let (after, steps) = Engine::new(&provider).execute_plan(&appendix_plan(), &before).unwrap();

    let sb = &after.storyboard;
    assert!(sb.node_by_view("OldSettingsView").is_none());
    let profile = sb.node_by_view("UserProfileView").expect("profile added");
    assert_eq!(profile.id, NodeId(103));
    assert_eq!(profile.name, "User Profile");
    assert!(sb.has_edge(NodeId(103), NodeId(102)));
    assert!(after.skeleton_by_view("UserProfileView").is_some());
    assert!(after.skeleton_by_view("UserDetailsView").is_some());
    assert!(after.skeleton_by_view("OldSettingsView").is_none());
    assert!(after.data_model.entity("User").is_some());
    assert!(after.validate().is_ok());

    let stages: Vec<Stage> = steps.iter().map(|s| s.stage).collect();
    assert_eq!(
        stages,
        vec![Stage::Plan, Stage::Storyboard, Stage::DataModel, Stage::Skeleton, Stage::Skeleton]
    );
    assert_cascade(&steps);
    assert_eq!(after.history.len(), before.history.len() + steps.len());

    let diff = diff_project(&before, &after);
    assert_eq!(diff.skeletons.added.len(), 2, "{diff:?}");
    assert_eq!(diff.skeletons.removed, vec!["OldSettingsView".to_string()]);
    assert_eq!(diff.nodes.added.len(), 1);
    assert_eq!(diff.nodes.removed.len(), 1);
}

#[test]
fn diff_identity_and_locality() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..20 {
        let project = random_project(&mut rng, 8);
        assert!(diff_project(&project, &project).is_empty());

        let sb = &project.storyboard;
        let Some((from, to)) = sb
            .nodes
            .iter()
            .flat_map(|a| sb.nodes.iter().map(move |b| (a.id, b.id)))
            .find(|&(a, b)| a != b && !sb.has_edge(a, b))
        else {
            continue;
        };
        let mut next = project.clone();
        next.storyboard = apply_storyboard_change(sb, &StoryboardChange::AddConnection { from, to }).unwrap();
        let diff = diff_project(&project, &next);
        assert_eq!(diff.nodes.modified.len(), 1);
        assert_eq!(diff.nodes.modified[0].id, from);
        assert!(diff.nodes.added.is_empty() && diff.nodes.removed.is_empty());
        assert!(diff.entities.is_empty() && diff.skeletons.is_empty() && !diff.storyboard_meta_changed);
    }
}

#[test]
fn empty_plan_logs_only_the_plan_step() {
    let mut rng = StdRng::seed_from_u64(5);
    let project = random_project(&mut rng, 6);
    let provider = ScriptedProvider::new(vec![ScriptedResponse::any("{}")]).unwrap();
    let (after, steps) = Engine::new(&provider).execute_plan(&ChangePlan::default(), &project).unwrap();
    assert!(after.same_ir(&project));
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0].stage, Stage::Plan);
    assert!(provider.calls().is_empty());
}

#[test]
fn random_plans_commit_valid_projects_in_cascade_order() {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut touched_all = 0;
    for case in 0..220 {
        let project = random_project(&mut rng, 8);
        let s = scenario(&mut rng, &project);
        assert!(validate_plan(&s.plan, &project).is_ok(), "case {case}: {}", validate_plan(&s.plan, &project));

        let provider = ScriptedProvider::new(s.responses).unwrap();
        let (after, steps) = Engine::new(&provider)
            .execute_plan(&s.plan, &project)
            .unwrap_or_else(|e| panic!("case {case}: {e}"));

        assert_cascade(&steps);
        let stages: BTreeSet<Stage> = steps.iter().map(|s| s.stage).collect();
        if [Stage::Storyboard, Stage::DataModel, Stage::Skeleton].iter().all(|st| stages.contains(st)) {
            touched_all += 1;
        }
        let report = after.validate();
        assert!(report.is_ok(), "case {case}:\n{report}");
        let edges: BTreeSet<_> = after.storyboard.edges().into_iter().collect();
        assert_eq!(edges, s.expected_edges, "case {case}");
        for view in &s.added_views {
            assert!(after.skeleton_by_view(view).is_some(), "case {case}: {view}");
        }
        if let Some(id) = s.removed {
            assert!(!after.storyboard.contains(id) && !after.skeletons.contains_key(&id));
        }
        assert_eq!(after.skeletons.len(), after.storyboard.nodes.len());
    }
    assert_eq!(touched_all, 220);
}

#[test]
fn skeleton_stage_runs_concurrently() {
    let delay = 300;
    let (project, plan, responses) = four_screen_case(delay);

    let provider = ScriptedProvider::new(responses.clone()).unwrap();
    let started = Instant::now();
    let (concurrent, _) = Engine::new(&provider).execute_plan(&plan, &project).unwrap();
    let wall = started.elapsed();
    assert!(wall < Duration::from_millis(4 * delay), "took {wall:?}");

    let options = EngineOptions {
        concurrent_skeletons: false,
        ..EngineOptions::default()
    };
    let provider = ScriptedProvider::new(responses).unwrap();
    let started = Instant::now();
    let (sequential, _) = Engine::new(&provider).with_options(&options).execute_plan(&plan, &project).unwrap();
    assert!(started.elapsed() >= Duration::from_millis(4 * delay));

    assert!(concurrent.same_ir(&sequential));
    assert_eq!(concurrent.skeletons, sequential.skeletons);
}

#[test]
fn stage_failure_commits_nothing() {
    let mut rng = StdRng::seed_from_u64(8);
    for (failing, stage) in [(TemplateId::StoryboardMod, Stage::Storyboard), (TemplateId::DataModelMod, Stage::DataModel), (TemplateId::SkeletonMod, Stage::Skeleton)] {
        let project = random_project(&mut rng, 6);
        let snapshot = serialize_state(&project);
        let mut s = scenario(&mut rng, &project);
        if failing == TemplateId::StoryboardMod && s.plan.storyboard_changes.add_screens.is_empty() {
            let mut forced = ScreenRef::new(project.storyboard.max_id().0 + 50, "Forced");
            forced.swift_ui_view_name = Some("ForcedView".into());
            s.plan.storyboard_changes.add_screens.push(forced);
            s.plan.gui_skeleton_changes.new_files_to_create.push(FileRef::new("ForcedView", 0));
        }
        let mut failure = ScriptedResponse::failing(failing, 500);
        let responses: Vec<ScriptedResponse> = if failing == TemplateId::SkeletonMod {
            let view = s.plan.gui_skeleton_changes.files_to_modify[0].swift_ui_view_name.clone();
            failure.target = Some(view.clone());
            s.responses.into_iter().filter(|r| r.target.as_deref() != Some(view.as_str())).collect()
        } else {
            s.responses.into_iter().filter(|r| r.template != Some(failing)).collect()
        };
        let mut responses = responses;
        responses.push(failure);
        let provider = ScriptedProvider::new(responses).unwrap();
        let err = Engine::new(&provider).execute_plan(&s.plan, &project).unwrap_err();
        assert_eq!(err.code(), "provider_error", "{err}");
        assert_eq!(err.stage(), Some(stage));
        assert_eq!(serialize_state(&project), snapshot);
    }
}

#[test]
fn replay_is_deterministic() {
    let mut rng = StdRng::seed_from_u64(13);
    let project = random_project(&mut rng, 7);
    let s = scenario(&mut rng, &project);
    let run = || {
        let provider = ScriptedProvider::new(s.responses.clone()).unwrap();
        Engine::new(&provider).execute_plan(&s.plan, &project).unwrap().0
    };
    let a = run();
    let b = run();
    assert!(a.same_ir(&b));
    assert_eq!(serialize_state(&a), serialize_state(&b));
}

#[test]
fn free_function_matches_engine() {
    let provider = ScriptedProvider::new(appendix_stage_responses()).unwrap();
    let (project, steps) =
        athena_core::plan::execute_plan(&appendix_plan(), &appendix_project(false), &provider).unwrap();
    assert!(project.validate().is_ok());
    assert!(steps.iter().all(|s| s.ended_at >= s.started_at));
    let call_ids: Vec<_> = steps.iter().filter_map(|s| s.provider_call_id.clone()).collect();
    assert_eq!(call_ids.len(), 4);
}
