//! Planning and cascade execution.

use std::collections::{BTreeMap, BTreeSet};
use std::thread;

use chrono::Utc;
use serde_json::Value;
use thiserror::Error;

use super::model::{resolve_file_ref, validate_plan, ChangePlan, Target};
use super::project::{describe_ir_edit, ExecutedStep, IrEdit, Project, Stage};
use crate::ir::{
    apply_storyboard_change, ir_from_value, serialize_ir, to_canonical_text, validate_data_model,
    validate_project, validate_skeleton, validate_storyboard, DataModel, GuiSkeleton, NodeId, Storyboard,
    StoryboardChange, StoryboardError,
};
use crate::llm::{
    complete_json_with, default_templates, ChatMessage, CompletionRequest, LlmError, Provider,
    TemplateError, TemplateId, TemplateSet, SYSTEM_PREAMBLE,
};
use crate::report::{Finding, ValidationReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("request text is empty")]
    EmptyRequest,
    #[error("project does not validate:\n{0}")]
    ProjectInvalid(ValidationReport),
    #[error("{stage} stage: {source}")]
    Provider { stage: Stage, source: LlmError },
    #[error("plan is invalid:\n{0}")]
    PlanInvalid(ValidationReport),
    #[error("{stage} stage produced invalid output:\n{report}")]
    StageOutputInvalid { stage: Stage, report: ValidationReport },
    #[error("generated code is invalid:\n{0}")]
    CodegenInvalid(ValidationReport),
    #[error("{stage} stage: {source}")]
    Template { stage: Stage, source: TemplateError },
}

impl PlanError {
    pub fn code(&self) -> &'static str {
        match self {
            PlanError::EmptyRequest => "empty_request",
            PlanError::ProjectInvalid(_) => "project_invalid",
            PlanError::Provider { source, .. } => match source {
                LlmError::Timeout => "timeout",
                _ => "provider_error",
            },
            PlanError::PlanInvalid(_) => "plan_invalid",
            PlanError::StageOutputInvalid { .. } => "stage_output_invalid",
            PlanError::CodegenInvalid(_) => "codegen_invalid",
            PlanError::Template { source, .. } => match source {
                TemplateError::UnboundPlaceholder(_) => "unbound_placeholder",
                TemplateError::Io { .. } => "template_error",
            },
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            PlanError::Provider { stage, .. }
            | PlanError::StageOutputInvalid { stage, .. }
            | PlanError::Template { stage, .. } => Some(*stage),
            PlanError::PlanInvalid(_) => Some(Stage::Plan),
            PlanError::CodegenInvalid(_) => Some(Stage::Codegen),
            PlanError::EmptyRequest | PlanError::ProjectInvalid(_) => None,
        }
    }

    pub fn report(&self) -> Option<&ValidationReport> {
        match self {
            PlanError::ProjectInvalid(r)
            | PlanError::PlanInvalid(r)
            | PlanError::CodegenInvalid(r)
            | PlanError::StageOutputInvalid { report: r, .. } => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineOptions {
    /// Run skeleton prompts for distinct views in parallel.
    pub concurrent_skeletons: bool,
    /// Re-prompts allowed for a plan that parses but fails `validate_plan`.
    pub plan_repairs: usize,
    /// Generate one design spec per view before code generation.
    pub view_designs: bool,
    /// One code-generation call per view instead of a single call.
    pub per_view_codegen: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            concurrent_skeletons: true,
            plan_repairs: 1,
            view_designs: false,
            per_view_codegen: false,
        }
    }
}

pub type StepSink<'a> = &'a (dyn Fn(&ExecutedStep) + Sync);

/// Everything a pipeline run needs: the provider, the templates and options.
#[derive(Clone, Copy)]
pub struct Engine<'a> {
    pub provider: &'a dyn Provider,
    pub templates: &'a TemplateSet,
    pub options: &'a EngineOptions,
    on_step: Option<StepSink<'a>>,
}

static DEFAULT_OPTIONS: std::sync::LazyLock<EngineOptions> =
    std::sync::LazyLock::new(EngineOptions::default);

impl<'a> Engine<'a> {
    pub fn new(provider: &'a dyn Provider) -> Self {
        Self {
            provider,
            templates: default_templates(),
            options: &DEFAULT_OPTIONS,
            on_step: None,
        }
    }

    pub fn with_templates(mut self, templates: &'a TemplateSet) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_options(mut self, options: &'a EngineOptions) -> Self {
        self.options = options;
        self
    }

    /// Called once per finished step, possibly from worker threads.
    pub fn on_step(mut self, sink: StepSink<'a>) -> Self {
        self.on_step = Some(sink);
        self
    }

    pub(crate) fn emit(&self, step: &ExecutedStep) {
        if let Some(sink) = self.on_step {
            sink(step);
        }
    }

    pub(crate) fn local_step(&self, stage: Stage, target: &str, started: chrono::DateTime<Utc>, note: String) -> ExecutedStep {
        let mut step = ExecutedStep::new(stage, target, started);
        step.note = note;
        self.emit(&step);
        step
    }

    /// Renders `template`, calls the provider and parses the response,
    /// re-prompting while `may_retry` allows.
    pub(crate) fn call<T>(
        &self,
        stage: Stage,
        target: &str,
        template: TemplateId,
        bindings: &BTreeMap<&str, String>,
        may_retry: impl FnMut(&ValidationReport, usize) -> bool,
        parse: impl FnMut(Value) -> Result<T, ValidationReport>,
    ) -> Result<(T, ExecutedStep), PlanError> {
        let started = Utc::now();
        let rendered = self
            .templates
            .render(template, bindings)
            .map_err(|source| PlanError::Template { stage, source })?;
        let mut request = CompletionRequest::new(
            template,
            vec![ChatMessage::system(SYSTEM_PREAMBLE), ChatMessage::user(rendered.text)],
        );
        if target != "-" {
            request = request.with_target(target);
        }
        match complete_json_with(self.provider, request, may_retry, parse) {
            Ok(done) => {
                let mut step = ExecutedStep::new(stage, target, started);
                step.provider_call_id = done.transcript.last_call_id().map(str::to_string);
                step.responses = done.transcript.responses;
                self.emit(&step);
                Ok((done.value, step))
            }
            Err(LlmError::SchemaAfterRetries { report, .. }) => Err(match stage {
                Stage::Plan => PlanError::PlanInvalid(report),
                Stage::Codegen => PlanError::CodegenInvalid(report),
                _ => PlanError::StageOutputInvalid { stage, report },
            }),
            Err(LlmError::Template(source)) => Err(PlanError::Template { stage, source }),
            Err(source) => Err(PlanError::Provider { stage, source }),
        }
    }

    /// Retry policy: the provider's budget for unusable JSON, `repairs` for
    /// output that parses but fails validation.
    pub(crate) fn retry_policy(&self, repairs: usize) -> impl FnMut(&ValidationReport, usize) -> bool {
        let retries = self.provider.limits().retries as usize;
        move |report: &ValidationReport, done: usize| {
            let malformed = report.has_code("invalid_json") || report.has_code("schema_error");
            done < if malformed { retries } else { repairs.min(retries.max(1)) }
        }
    }

    /// Decomposes a request into a validated change plan.
    pub fn plan_request(&self, request: &str, project: &Project) -> Result<(ChangePlan, ExecutedStep), PlanError> {
        if request.trim().is_empty() {
            return Err(PlanError::EmptyRequest);
        }
        let report = project.validate();
        if !report.is_ok() {
            return Err(PlanError::ProjectInvalid(report));
        }
        let bindings = BTreeMap::from([
            ("currentStoryboard", serialize_ir(&project.storyboard)),
            ("currentDataModel", serialize_ir(&project.data_model)),
            ("currentSkeletons", skeletons_text(project.skeletons.values())),
            ("request", request.trim().to_string()),
        ]);
        self.call(
            Stage::Plan,
            "-",
            TemplateId::Plan,
            &bindings,
            self.retry_policy(self.options.plan_repairs),
            |value| {
                let plan = ChangePlan::from_value(value)?;
                let report = validate_plan(&plan, project);
                if report.is_ok() {
                    Ok(plan)
                } else {
                    Err(report)
                }
            },
        )
    }

    /// `plan_request` followed by execution; the plan step heads the log.
    pub fn apply_request(&self, request: &str, project: &Project) -> Result<(Project, Vec<ExecutedStep>), PlanError> {
        let (plan, step) = self.plan_request(request, project)?;
        self.execute_planned(&plan, step, project)
    }

    /// A direct edit of one IR. When the edited project validates on its own
    /// the edit is committed as written with a single local step; otherwise
    /// it becomes a change request so the cascade can bring the dependent
    /// IRs in line.
    pub fn apply_edit(&self, edit: &IrEdit, project: &Project) -> Result<(Project, Vec<ExecutedStep>), PlanError> {
        let started = Utc::now();
        let (own, stage, target) = match edit {
            IrEdit::Storyboard(sb) => (validate_storyboard(sb), Stage::Storyboard, "-".to_string()),
            IrEdit::DataModel(dm) => (validate_data_model(dm), Stage::DataModel, "-".to_string()),
            IrEdit::Skeleton(sk) => (validate_skeleton(sk, ""), Stage::Skeleton, sk.view_name.clone()),
        };
        if !own.is_ok() {
            return Err(PlanError::StageOutputInvalid { stage, report: own });
        }
        let mut next = edit.apply_to(project);
        if next.validate().is_ok() {
            let step = self.local_step(stage, &target, started, "direct edit".to_string());
            next.history.push(step.clone());
            return Ok((next, vec![step]));
        }
        self.apply_request(&describe_ir_edit(project, edit), project)
    }

    /// Executes a plan in cascade order. The input project is never modified;
    /// on error nothing is committed.
    pub fn execute_plan(&self, plan: &ChangePlan, project: &Project) -> Result<(Project, Vec<ExecutedStep>), PlanError> {
        let started = Utc::now();
        let report = validate_plan(plan, project);
        if !report.is_ok() {
            return Err(PlanError::PlanInvalid(report));
        }
        let step = self.local_step(Stage::Plan, "-", started, plan.technical_description.summary.clone());
        self.execute_planned(plan, step, project)
    }

    fn execute_planned(
        &self,
        plan: &ChangePlan,
        plan_step: ExecutedStep,
        project: &Project,
    ) -> Result<(Project, Vec<ExecutedStep>), PlanError> {
        let report = validate_plan(plan, project);
        if !report.is_ok() {
            return Err(PlanError::PlanInvalid(report));
        }
        let mut steps = vec![plan_step];
        let mut last_stage = Stage::Plan;

        // Storyboard.
        let sc = &plan.storyboard_changes;
        let mut sb = project.storyboard.clone();
        let mut added_ids: Vec<NodeId> = Vec::new();
        let mut id_map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        if !sc.is_empty() {
            let started = Utc::now();
            let atom_err = |e: StoryboardError| PlanError::StageOutputInvalid {
                stage: Stage::Storyboard,
                report: ValidationReport::single(Finding::error(e.code(), "storyboardChanges", e.to_string())),
            };
            for c in &sc.remove_connections {
                sb = apply_storyboard_change(&sb, &StoryboardChange::RemoveConnection { from: c.from, to: c.to })
                    .map_err(atom_err)?;
            }
            for s in &sc.remove_screens {
                sb = apply_storyboard_change(&sb, &StoryboardChange::RemoveScreen(s.id)).map_err(atom_err)?;
            }
            for s in &sc.add_screens {
                let view = s.intended_view_name();
                let name = if s.name.trim().is_empty() { view.clone() } else { s.name.clone() };
                let (mut next, mut id) = sb.add_screen(&name, &s.description, Some(&view));
                // Ids freed by this plan's removals are not handed out again.
                let floor = project.storyboard.max_id().0.max(sb.max_id().0);
                if id.0 <= floor {
                    let fresh = NodeId(floor + 1);
                    if let Some(node) = next.nodes.iter_mut().find(|n| n.id == id) {
                        node.id = fresh;
                    }
                    id = fresh;
                }
                sb = next;
                added_ids.push(id);
                if s.id.is_assigned() {
                    id_map.insert(s.id, id);
                }
            }
            let map = |id: NodeId| id_map.get(&id).copied().unwrap_or(id);
            for c in &sc.add_connections {
                sb = apply_storyboard_change(&sb, &StoryboardChange::AddConnection { from: map(c.from), to: map(c.to) })
                    .map_err(atom_err)?;
            }

            if added_ids.is_empty() {
                let atoms = sc.remove_connections.len() + sc.remove_screens.len() + sc.add_connections.len();
                steps.push(self.local_step(Stage::Storyboard, "-", started, format!("{atoms} structural change(s) applied")));
            } else {
                let bindings = BTreeMap::from([
                    ("currentStoryboard", serialize_ir(&sb)),
                    ("change", change_text(plan, &id_map, &sb)),
                ]);
                let local = sb.clone();
                let added = added_ids.clone();
                let (merged, step) = self.call(
                    Stage::Storyboard,
                    "-",
                    TemplateId::StoryboardMod,
                    &bindings,
                    self.retry_policy(1),
                    |value| merge_screen_text(&local, &added, value),
                )?;
                sb = merged;
                steps.push(step);
            }
            let report = validate_storyboard(&sb);
            if !report.is_ok() {
                return Err(PlanError::StageOutputInvalid { stage: Stage::Storyboard, report });
            }
            last_stage = Stage::Storyboard;
        }

        // Data model.
        let mut dm = project.data_model.clone();
        if !plan.data_model_changes.is_empty() {
            let bindings = BTreeMap::from([
                ("currentStoryboard", serialize_ir(&sb)),
                ("currentDataModel", serialize_ir(&dm)),
                ("change", change_text(plan, &id_map, &sb)),
            ]);
            let (next, step) = self.call(
                Stage::DataModel,
                "-",
                TemplateId::DataModelMod,
                &bindings,
                self.retry_policy(1),
                parse_data_model,
            )?;
            dm = next;
            steps.push(step);
            last_stage = Stage::DataModel;
        }

        // Skeletons.
        let gc = &plan.gui_skeleton_changes;
        let mut skels = project.skeletons.clone();
        for f in &gc.files_to_delete {
            if let Some(Target::Existing(id)) = resolve_file_ref(plan, project, f) {
                skels.remove(&id);
            }
        }
        for s in &sc.remove_screens {
            skels.remove(&s.id);
        }
        let mut targets: BTreeSet<NodeId> = BTreeSet::new();
        for f in gc.files_to_modify.iter().chain(&gc.new_files_to_create) {
            match resolve_file_ref(plan, project, f) {
                Some(Target::Existing(id)) if sb.contains(id) => {
                    targets.insert(id);
                }
                Some(Target::Added(i)) => {
                    targets.insert(added_ids[i]);
                }
                _ => {}
            }
        }
        // Skeletons the earlier stages invalidated.
        for node in &sb.nodes {
            match skels.get(&node.id) {
                None => {
                    targets.insert(node.id);
                }
                Some(skel) if !skeleton_report(&sb, &dm, skel).is_ok() => {
                    targets.insert(node.id);
                }
                Some(_) => {}
            }
        }
        if !targets.is_empty() {
            let targets: Vec<NodeId> = targets.into_iter().collect();
            let change = change_text(plan, &id_map, &sb);
            for (skel, step) in self.generate_skeletons(&sb, &dm, &targets, &skels, "none", &change)? {
                skels.insert(skel.node_id, skel);
                steps.push(step);
            }
            last_stage = Stage::Skeleton;
        } else if !gc.files_to_delete.is_empty() {
            let started = Utc::now();
            steps.push(self.local_step(Stage::Skeleton, "-", started, format!("{} skeleton(s) deleted", gc.files_to_delete.len())));
            last_stage = Stage::Skeleton;
        }

        let mut next = Project {
            storyboard: sb,
            data_model: dm,
            skeletons: skels,
            design_scaffold: project.design_scaffold.clone(),
            history: project.history.clone(),
        };
        let report = next.validate();
        if !report.is_ok() {
            return Err(PlanError::StageOutputInvalid { stage: last_stage, report });
        }
        next.history.extend(steps.iter().cloned());
        Ok((next, steps))
    }

    /// Generates or regenerates the skeletons of `targets`, concurrently
    /// unless disabled. Results come back in target order.
    pub(crate) fn generate_skeletons(
        &self,
        sb: &Storyboard,
        dm: &DataModel,
        targets: &[NodeId],
        existing: &BTreeMap<NodeId, GuiSkeleton>,
        navigation_plan: &str,
        change: &str,
    ) -> Result<Vec<(GuiSkeleton, ExecutedStep)>, PlanError> {
        let sb_text = serialize_ir(sb);
        let dm_text = serialize_ir(dm);
        let one = |id: NodeId| -> Result<(GuiSkeleton, ExecutedStep), PlanError> {
            let node = sb.node(id).expect("target is a storyboard node");
            let view = node.swift_ui_view_name.clone();
            let current = existing
                .get(&id)
                .map(serialize_ir)
                .unwrap_or_else(|| "none (this view is new)".to_string());
            let bindings = BTreeMap::from([
                ("viewName", view.clone()),
                ("currentStoryboard", sb_text.clone()),
                ("currentDataModel", dm_text.clone()),
                ("navigationPlan", navigation_plan.to_string()),
                ("currentSkeleton", current),
                ("change", change.to_string()),
            ]);
            self.call(
                Stage::Skeleton,
                &view,
                TemplateId::SkeletonMod,
                &bindings,
                self.retry_policy(1),
                |value| parse_skeleton(sb, dm, id, &view, value),
            )
        };
        let results: Vec<_> = if self.options.concurrent_skeletons && targets.len() > 1 {
            thread::scope(|scope| {
                let handles: Vec<_> = targets.iter().map(|&id| scope.spawn(move || one(id))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("skeleton worker panicked"))
                    .collect()
            })
        } else {
            targets.iter().map(|&id| one(id)).collect()
        };
        results.into_iter().collect()
    }
}

/// Free-function form with built-in templates and default options.
pub fn plan_request(request: &str, project: &Project, provider: &dyn Provider) -> Result<ChangePlan, PlanError> {
    Engine::new(provider).plan_request(request, project).map(|(plan, _)| plan)
}

/// Free-function form with built-in templates and default options.
pub fn execute_plan(
    plan: &ChangePlan,
    project: &Project,
    provider: &dyn Provider,
) -> Result<(Project, Vec<ExecutedStep>), PlanError> {
    Engine::new(provider).execute_plan(plan, project)
}

pub(crate) fn skeletons_text<'s>(skels: impl IntoIterator<Item = &'s GuiSkeleton>) -> String {
    let values: Vec<Value> = skels.into_iter().map(GuiSkeleton::to_value).collect();
    to_canonical_text(&values)
}

/// The change description handed to stage prompts.
fn change_text(plan: &ChangePlan, id_map: &BTreeMap<NodeId, NodeId>, sb: &Storyboard) -> String {
    let mut out = format!("Summary: {}\n\nChange plan:\n", plan.technical_description.summary);
    out.push_str(&to_canonical_text(plan));
    if !id_map.is_empty() {
        out.push_str("\nNew screens were assigned these ids:\n");
        for (from, to) in id_map {
            let view = sb.node(*to).map(|n| n.swift_ui_view_name.as_str()).unwrap_or("");
            out.push_str(&format!("- plan id {from} is screen {to} ({view})\n"));
        }
    }
    out
}

/// Takes names and descriptions of the added screens from a model response;
/// structure always comes from the locally applied atoms.
fn merge_screen_text(local: &Storyboard, added: &[NodeId], value: Value) -> Result<Storyboard, ValidationReport> {
    let response: Storyboard = ir_from_value(value).map_err(|e| e.to_report())?;
    let mut merged = local.clone();
    let mut report = ValidationReport::new();
    for id in added {
        let node = merged.nodes.iter_mut().find(|n| n.id == *id).expect("added node");
        let found = response
            .node_by_view(&node.swift_ui_view_name)
            .or_else(|| response.node(*id));
        match found {
            Some(r) => {
                if !r.name.trim().is_empty() {
                    node.name = r.name.clone();
                }
                if !r.description.trim().is_empty() {
                    node.description = r.description.clone();
                }
            }
            None => report.push(Finding::error(
                "missing_node",
                "nodes",
                format!("response lacks the new screen '{}' (id {id})", node.swift_ui_view_name),
            )),
        }
    }
    if report.is_ok() {
        Ok(merged)
    } else {
        Err(report)
    }
}

pub(crate) fn parse_data_model(value: Value) -> Result<DataModel, ValidationReport> {
    let dm: DataModel = ir_from_value(value).map_err(|e| e.to_report())?;
    let dm = dm.completed();
    let report = validate_data_model(&dm);
    if report.is_ok() {
        Ok(dm)
    } else {
        Err(report)
    }
}

/// Findings about one skeleton in the context of the storyboard and data model.
pub fn skeleton_report(sb: &Storyboard, dm: &DataModel, skel: &GuiSkeleton) -> ValidationReport {
    let prefix = format!("skeletons[{}].", skel.view_name);
    ValidationReport {
        findings: validate_project(sb, dm, [skel])
            .findings
            .into_iter()
            .filter(|f| f.path.starts_with(&prefix))
            .collect(),
    }
}

fn parse_skeleton(
    sb: &Storyboard,
    dm: &DataModel,
    id: NodeId,
    view: &str,
    value: Value,
) -> Result<GuiSkeleton, ValidationReport> {
    let mut skel: GuiSkeleton = ir_from_value(value).map_err(|e| e.to_report())?;
    if skel.view_name.trim().is_empty() {
        skel.view_name = view.to_string();
    }
    if skel.view_name != view {
        return Err(ValidationReport::single(Finding::error(
            "skeleton_view_mismatch",
            "viewName",
            format!("expected a skeleton for '{view}', got '{}'", skel.view_name),
        )));
    }
    skel.node_id = id;
    let report = skeleton_report(sb, dm, &skel);
    if report.is_ok() {
        Ok(skel)
    } else {
        Err(report)
    }
}
