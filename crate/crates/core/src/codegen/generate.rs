//! Design scaffold, navigation plan, code generation and initial generation.

use std::collections::{BTreeMap, BTreeSet};
use std::thread;

use serde_json::Value;

use super::design::{DesignScaffold, NavigationPlan, ViewDesignSpec};
use super::output::{validate_generated, GeneratedProject, GeneratedView, Utility};
use crate::ir::{
    ir_from_value, serialize_ir, to_canonical_text, validate_storyboard, DataModel, NodeId, Storyboard,
};
use crate::llm::TemplateId;
use crate::plan::engine::{parse_data_model, skeletons_text};
use crate::plan::{Engine, ExecutedStep, PlanError, Project, Stage};
use crate::report::{Finding, ValidationReport};

/// Retry policy for code generation: one re-prompt per new class of
/// violation, the provider's budget for unusable JSON.
fn per_class_policy(retries: usize) -> impl FnMut(&ValidationReport, usize) -> bool {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut malformed = 0;
    move |report: &ValidationReport, _| {
        if report.has_code("invalid_json") || report.has_code("schema_error") {
            malformed += 1;
            return malformed <= retries;
        }
        let mut fresh = false;
        for f in report.errors() {
            fresh |= seen.insert(f.code.clone());
        }
        fresh
    }
}

impl Engine<'_> {
    pub fn generate_design_scaffold(&self, request: &str) -> Result<(DesignScaffold, ExecutedStep), PlanError> {
        if request.trim().is_empty() {
            return Err(PlanError::EmptyRequest);
        }
        let bindings = BTreeMap::from([("request", request.trim().to_string())]);
        self.call(
            Stage::DesignScaffold,
            "-",
            TemplateId::DesignScaffold,
            &bindings,
            self.retry_policy(1),
            DesignScaffold::from_value,
        )
    }

    /// A plan whose every transition follows a storyboard edge; one repair
    /// re-prompt, then `plan_edge_mismatch`.
    pub fn generate_navigation_plan(
        &self,
        sb: &Storyboard,
        dm: &DataModel,
    ) -> Result<(NavigationPlan, ExecutedStep), PlanError> {
        let report = validate_storyboard(sb);
        if !report.is_ok() {
            return Err(PlanError::ProjectInvalid(report));
        }
        let bindings = BTreeMap::from([
            ("currentStoryboard", serialize_ir(sb)),
            ("currentDataModel", serialize_ir(dm)),
        ]);
        self.call(
            Stage::NavigationPlan,
            "-",
            TemplateId::NavigationPlan,
            &bindings,
            self.retry_policy(1),
            |value| NavigationPlan::from_value(value, sb),
        )
    }

    /// One design spec per view, in storyboard order.
    pub fn generate_view_designs(
        &self,
        project: &Project,
        scaffold: &DesignScaffold,
    ) -> Result<Vec<(String, ViewDesignSpec, ExecutedStep)>, PlanError> {
        let scaffold_text = to_canonical_text(scaffold);
        let one = |id: NodeId| {
            let node = project.storyboard.node(id).expect("node");
            let view = node.swift_ui_view_name.clone();
            let skeleton = project
                .skeletons
                .get(&id)
                .map(serialize_ir)
                .unwrap_or_else(|| "none".to_string());
            let bindings = BTreeMap::from([
                ("viewName", view.clone()),
                ("currentSkeleton", skeleton),
                ("designScaffold", scaffold_text.clone()),
            ]);
            self.call(
                Stage::Codegen,
                &view,
                TemplateId::ViewDesign,
                &bindings,
                self.retry_policy(1),
                ViewDesignSpec::from_value,
            )
            .map(|(spec, step)| (view, spec, step))
        };
        let ids: Vec<NodeId> = project.storyboard.nodes.iter().map(|n| n.id).collect();
        let results: Vec<_> = if self.options.concurrent_skeletons {
            thread::scope(|scope| {
                let handles: Vec<_> = ids.iter().map(|&id| scope.spawn(move || one(id))).collect();
                handles.into_iter().map(|h| h.join().expect("design worker panicked")).collect()
            })
        } else {
            ids.iter().map(|&id| one(id)).collect()
        };
        results.into_iter().collect()
    }

    /// Lowers the IRs to source files. The project must validate and carry a
    /// design scaffold.
    pub fn generate_code(&self, project: &Project) -> Result<(GeneratedProject, Vec<ExecutedStep>), PlanError> {
        let report = project.validate();
        if !report.is_ok() {
            return Err(PlanError::ProjectInvalid(report));
        }
        let Some(scaffold) = project.design_scaffold.clone() else {
            return Err(PlanError::ProjectInvalid(ValidationReport::single(Finding::error(
                "missing_scaffold",
                "designScaffold",
                "generate a design scaffold before code generation",
            ))));
        };
        let mut steps = Vec::new();
        let designs_text = if self.options.view_designs {
            let designs = self.generate_view_designs(project, &scaffold)?;
            let mut map = serde_json::Map::new();
            for (view, spec, step) in designs {
                map.insert(view, serde_json::to_value(spec).expect("spec serializes"));
                steps.push(step);
            }
            to_canonical_text(&Value::Object(map))
        } else {
            "none".to_string()
        };
        let sb = &project.storyboard;
        let base = BTreeMap::from([
            ("currentStoryboard", serialize_ir(sb)),
            ("currentDataModel", serialize_ir(&project.data_model)),
            ("designScaffold", to_canonical_text(&scaffold)),
            ("viewDesigns", designs_text),
        ]);
        let retries = self.provider.limits().retries as usize;

        let mut gp = if self.options.per_view_codegen {
            let mut views: Vec<GeneratedView> = Vec::new();
            let mut utilities: Vec<Utility> = Vec::new();
            for node in &sb.nodes {
                let mut bindings = base.clone();
                bindings.insert("skeletons", skeletons_text(project.skeletons.get(&node.id)));
                let view_name = node.swift_ui_view_name.clone();
                let (part, step) = self.call(
                    Stage::Codegen,
                    &view_name,
                    TemplateId::CodeGen,
                    &bindings,
                    per_class_policy(retries),
                    |value| {
                        let gp = GeneratedProject::from_response(value, sb)?;
                        let report = validate_single_view(&gp, &view_name);
                        if report.is_ok() {
                            Ok(gp)
                        } else {
                            Err(report)
                        }
                    },
                )?;
                steps.push(step);
                views.extend(part.views.into_iter().filter(|v| v.swift_ui_view_name == view_name));
                for u in part.utilities {
                    if !utilities.iter().any(|x| x.name == u.name) {
                        utilities.push(u);
                    }
                }
            }
            let mut gp = GeneratedProject::new(views, utilities);
            gp.fill_from_storyboard(sb);
            let report = validate_generated(&gp, sb);
            if !report.is_ok() {
                return Err(PlanError::CodegenInvalid(report));
            }
            gp
        } else {
            let mut bindings = base;
            bindings.insert("skeletons", skeletons_text(project.skeletons.values()));
            let (gp, step) = self.call(
                Stage::Codegen,
                "-",
                TemplateId::CodeGen,
                &bindings,
                per_class_policy(retries),
                |value| {
                    let gp = GeneratedProject::from_response(value, sb)?;
                    let report = validate_generated(&gp, sb);
                    if report.is_ok() {
                        Ok(gp)
                    } else {
                        Err(report)
                    }
                },
            )?;
            steps.push(step);
            gp
        };
        gp.scaffold_used = Some(scaffold);
        gp.refresh_metrics();
        Ok((gp, steps))
    }

    /// The first-message pipeline: storyboard, design scaffold, data model,
    /// navigation plan, then every skeleton with the plan in hand. The
    /// navigation plan is only kept in the step log.
    pub fn initial_generate(&self, first_message: &str) -> Result<(Project, Vec<ExecutedStep>), PlanError> {
        let request = first_message.trim();
        if request.is_empty() {
            return Err(PlanError::EmptyRequest);
        }
        let mut steps = Vec::new();

        let bindings = BTreeMap::from([("request", request.to_string())]);
        let (sb, step) = self.call(
            Stage::Storyboard,
            "-",
            TemplateId::InitialStoryboard,
            &bindings,
            self.retry_policy(1),
            parse_initial_storyboard,
        )?;
        steps.push(step);

        let (scaffold, step) = self.generate_design_scaffold(request)?;
        steps.push(step);

        let change = format!("Initial request: {request}\nCreate the data model the storyboard needs.");
        let bindings = BTreeMap::from([
            ("currentStoryboard", serialize_ir(&sb)),
            ("currentDataModel", serialize_ir(&DataModel::default())),
            ("change", change),
        ]);
        let (dm, step) = self.call(
            Stage::DataModel,
            "-",
            TemplateId::DataModelMod,
            &bindings,
            self.retry_policy(1),
            parse_data_model,
        )?;
        steps.push(step);

        let (nav, mut step) = self.generate_navigation_plan(&sb, &dm)?;
        step.note = format!("{} transition(s); discarded after skeleton generation", nav.transition_count());
        steps.push(step);

        let targets: Vec<NodeId> = sb.nodes.iter().map(|n| n.id).collect();
        let change = format!("Initial request: {request}\nCreate this view's skeleton from scratch.");
        let generated = self.generate_skeletons(
            &sb,
            &dm,
            &targets,
            &BTreeMap::new(),
            &to_canonical_text(&nav),
            &change,
        )?;
        let mut skeletons = BTreeMap::new();
        for (skel, step) in generated {
            skeletons.insert(skel.node_id, skel);
            steps.push(step);
        }

        let project = Project {
            storyboard: sb,
            data_model: dm,
            skeletons,
            design_scaffold: Some(scaffold),
            history: steps.clone(),
        };
        let report = project.validate();
        if !report.is_ok() {
            return Err(PlanError::StageOutputInvalid {
                stage: Stage::Skeleton,
                report,
            });
        }
        Ok((project, steps))
    }
}

fn validate_single_view(gp: &GeneratedProject, view: &str) -> ValidationReport {
    let mut report = ValidationReport::new();
    match gp.view(view) {
        None => report.push(Finding::error("missing_view", "views", format!("missing_view({view})"))),
        Some(v) if !super::output::declares_type(&v.view_code, view) => report.push(Finding::error(
            "type_name_mismatch",
            "views",
            format!("code does not declare a type named '{view}'"),
        )),
        Some(_) => {}
    }
    report
}

fn parse_initial_storyboard(value: Value) -> Result<Storyboard, ValidationReport> {
    let sb: Storyboard = ir_from_value(value).map_err(|e| e.to_report())?;
    let (sb, _) = sb.normalized();
    let mut report = validate_storyboard(&sb);
    if sb.nodes.is_empty() {
        report.push(Finding::error("empty_storyboard", "nodes", "the storyboard needs at least one screen"));
    }
    if report.is_ok() {
        Ok(sb)
    } else {
        Err(report)
    }
}

/// Free-function form with built-in templates and default options.
pub fn initial_generate(
    provider: &dyn crate::llm::Provider,
    first_message: &str,
) -> Result<Project, PlanError> {
    Engine::new(provider).initial_generate(first_message).map(|(p, _)| p)
}

/// Free-function form with built-in templates and default options.
pub fn generate_code(provider: &dyn crate::llm::Provider, project: &Project) -> Result<GeneratedProject, PlanError> {
    Engine::new(provider).generate_code(project).map(|(gp, _)| gp)
}
