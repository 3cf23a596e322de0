//! Session operations, independent of the transport.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex, RwLock, TryLockError};

use serde::Serialize;
use thiserror::Error;
use tokio::sync::broadcast;

use athena_core::analysis::{check_navigation, summarize, ErrorReport};
use athena_core::codegen::export_archive;
use athena_core::ir::{deserialize_ir, DataModel, GuiSkeleton, IrDocument, IrError, Storyboard};
use athena_core::llm::Provider;
use athena_core::plan::{diff_project, Engine, EngineOptions, ExecutedStep, IrEdit, PlanError, ProjectDiff};
use athena_core::report::{Finding, ValidationReport};

use crate::session::{ChatEntry, Phase, Role, Session, SessionSummary};
use crate::store::{Store, StoreError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session '{0}'")]
    NotFound(String),
    #[error("{0}")]
    Missing(String),
    #[error("session '{0}' already has an operation in progress")]
    Busy(String),
    #[error("{code}:\n{report}")]
    Invalid { code: String, report: ValidationReport },
    #[error(transparent)]
    Pipeline(#[from] PlanError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("export failed: {0}")]
    Export(String),
}

impl ServiceError {
    fn invalid(code: &str, path: &str, message: impl Into<String>) -> Self {
        ServiceError::Invalid {
            code: code.to_string(),
            report: ValidationReport::single(Finding::error(code, path, message.into())),
        }
    }

    pub fn status(&self) -> u16 {
        match self {
            ServiceError::NotFound(_) | ServiceError::Missing(_) => 404,
            ServiceError::Busy(_) => 409,
            ServiceError::Invalid { .. } => 422,
            ServiceError::Pipeline(e) => match e {
                PlanError::Provider { .. } => 502,
                PlanError::Template { .. } => 500,
                _ => 422,
            },
            ServiceError::Store(_) | ServiceError::Export(_) => 500,
        }
    }

    pub fn code(&self) -> String {
        match self {
            ServiceError::NotFound(_) | ServiceError::Missing(_) => "not_found".into(),
            ServiceError::Busy(_) => "busy".into(),
            ServiceError::Invalid { code, .. } => code.clone(),
            ServiceError::Pipeline(e) => e.code().into(),
            ServiceError::Store(_) | ServiceError::Export(_) => "io_error".into(),
        }
    }

    pub fn report(&self) -> Option<&ValidationReport> {
        match self {
            ServiceError::Invalid { report, .. } => Some(report),
            ServiceError::Pipeline(e) => e.report(),
            _ => None,
        }
    }

    pub fn stage(&self) -> Option<String> {
        match self {
            ServiceError::Pipeline(e) => e.stage().map(|s| s.to_string()),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ServiceError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IrKind {
    Storyboard,
    DataModel,
    Skeleton(String),
}

impl IrKind {
    pub fn parse(path: &str) -> Option<Self> {
        match path.trim_matches('/') {
            "storyboard" => Some(IrKind::Storyboard),
            "datamodel" => Some(IrKind::DataModel),
            other => other
                .strip_prefix("skeletons/")
                .filter(|v| !v.is_empty() && !v.contains('/'))
                .map(|v| IrKind::Skeleton(v.to_string())),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChangeOutcome {
    pub phase: Phase,
    pub reply: String,
    pub diff: ProjectDiff,
    pub steps: Vec<ExecutedStep>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GenerateSummary {
    pub phase: Phase,
    pub view_count: usize,
    pub lines_of_code: usize,
    pub views: Vec<String>,
    pub utilities: Vec<String>,
}

struct Slot {
    /// Last committed state; readers never wait on an operation.
    state: RwLock<Session>,
    busy: Mutex<()>,
    events: broadcast::Sender<ExecutedStep>,
}

pub struct SessionService {
    store: Store,
    provider: Arc<dyn Provider>,
    options: EngineOptions,
    slots: Mutex<HashMap<String, Arc<Slot>>>,
}

fn ir_error(e: IrError) -> ServiceError {
    let report = match &e {
        IrError::Schema(s) => s.to_report(),
        IrError::Parse { path, .. } => ValidationReport::single(Finding::error("parse_error", path, e.to_string())),
    };
    ServiceError::Invalid {
        code: e.code().to_string(),
        report,
    }
}

fn parse_body<T: IrDocument>(body: &str) -> Result<T> {
    deserialize_ir(body).map_err(ir_error)
}

/// One line per kind of change, for the chat transcript.
fn describe(diff: &ProjectDiff) -> String {
    if diff.is_empty() {
        return "No structural changes.".to_string();
    }
    let mut out = String::new();
    let names = |refs: &[athena_core::plan::NodeRef]| {
        refs.iter().map(|n| n.swift_ui_view_name.as_str()).collect::<Vec<_>>().join(", ")
    };
    if !diff.nodes.added.is_empty() {
        let _ = writeln!(out, "Added screens: {}.", names(&diff.nodes.added));
    }
    if !diff.nodes.removed.is_empty() {
        let _ = writeln!(out, "Removed screens: {}.", names(&diff.nodes.removed));
    }
    if !diff.nodes.modified.is_empty() {
        let _ = writeln!(out, "Updated screens: {}.", names(&diff.nodes.modified));
    }
    let entities = diff.entities.added.len() + diff.entities.removed.len() + diff.entities.modified.len();
    if entities > 0 {
        let _ = writeln!(out, "Data model: {entities} entity change(s).");
    }
    let skeletons = diff.skeletons.added.len() + diff.skeletons.removed.len() + diff.skeletons.modified.len();
    if skeletons > 0 {
        let _ = writeln!(out, "Skeletons: {skeletons} file change(s).");
    }
    out.trim_end().to_string()
}

impl SessionService {
    pub fn new(store: Store, provider: Arc<dyn Provider>, options: EngineOptions) -> Self {
        Self {
            store,
            provider,
            options,
            slots: Mutex::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>> {
        let mut slots = self.slots.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(slot) = slots.get(id) {
            return Ok(slot.clone());
        }
        let session = self.store.load(id)?.ok_or_else(|| ServiceError::NotFound(id.to_string()))?;
        let slot = Arc::new(Slot {
            state: RwLock::new(session),
            busy: Mutex::new(()),
            events: broadcast::channel(256).0,
        });
        slots.insert(id.to_string(), slot.clone());
        Ok(slot)
    }

    pub fn create(&self, app_name: Option<&str>) -> Result<SessionSummary> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let app = app_name.map(str::trim).filter(|s| !s.is_empty()).unwrap_or("App");
        let session = Session::new(&id, app);
        self.store.save(&session)?;
        let summary = SessionSummary::from(&session);
        let slot = Arc::new(Slot {
            state: RwLock::new(session),
            busy: Mutex::new(()),
            events: broadcast::channel(256).0,
        });
        self.slots.lock().unwrap_or_else(|p| p.into_inner()).insert(id, slot);
        Ok(summary)
    }

    pub fn list(&self) -> Result<Vec<String>> {
        Ok(self.store.list()?)
    }

    /// A copy of the last committed state.
    pub fn get(&self, id: &str) -> Result<Session> {
        let slot = self.slot(id)?;
        let session = slot.state.read().unwrap_or_else(|p| p.into_inner()).clone();
        Ok(session)
    }

    pub fn summary(&self, id: &str) -> Result<SessionSummary> {
        self.get(id).map(|s| SessionSummary::from(&s))
    }

    pub fn subscribe(&self, id: &str) -> Result<broadcast::Receiver<ExecutedStep>> {
        Ok(self.slot(id)?.events.subscribe())
    }

    /// Runs `op` on a copy of the committed state while holding the
    /// session's operation lock; the result is persisted, then published.
    fn mutate<T>(&self, id: &str, op: impl FnOnce(&Session, &Engine) -> Result<(Session, T)>) -> Result<T> {
        let slot = self.slot(id)?;
        let _guard = match slot.busy.try_lock() {
            Ok(guard) => guard,
            Err(TryLockError::Poisoned(p)) => p.into_inner(),
            Err(TryLockError::WouldBlock) => return Err(ServiceError::Busy(id.to_string())),
        };
        let current = slot.state.read().unwrap_or_else(|p| p.into_inner()).clone();
        let events = slot.events.clone();
        let sink = move |step: &ExecutedStep| {
            let _ = events.send(step.clone());
        };
        let engine = Engine::new(&*self.provider).with_options(&self.options).on_step(&sink);
        let (next, out) = op(&current, &engine)?;
        self.store.save(&next)?;
        *slot.state.write().unwrap_or_else(|p| p.into_inner()) = next;
        Ok(out)
    }

    /// The first message generates the project; later ones change it.
    pub fn post_message(&self, id: &str, text: &str) -> Result<ChangeOutcome> {
        self.mutate(id, |session, engine| {
            let (project, steps) = if session.phase() == Phase::Empty {
                engine.initial_generate(text)?
            } else {
                engine.apply_request(text, &session.project)?
            };
            let diff = diff_project(&session.project, &project);
            let reply = describe(&diff);
            let mut next = session.clone();
            next.project = project;
            next.generated = None;
            next.chat.push(ChatEntry::now(Role::User, text));
            next.chat.push(ChatEntry::now(Role::Assistant, reply.clone()));
            let outcome = ChangeOutcome {
                phase: next.phase(),
                reply,
                diff,
                steps,
            };
            Ok((next, outcome))
        })
    }

    pub fn get_ir(&self, id: &str, kind: &IrKind) -> Result<String> {
        let session = self.get(id)?;
        let project = &session.project;
        Ok(match kind {
            IrKind::Storyboard => athena_core::ir::serialize_ir(&project.storyboard),
            IrKind::DataModel => athena_core::ir::serialize_ir(&project.data_model),
            IrKind::Skeleton(view) => {
                let skel = project
                    .skeleton_by_view(view)
                    .ok_or_else(|| ServiceError::Missing(format!("no skeleton for view '{view}'")))?;
                athena_core::ir::serialize_ir(skel)
            }
        })
    }

    /// Replaces one IR document, through the plan engine.
    pub fn put_ir(&self, id: &str, kind: &IrKind, body: &str) -> Result<ChangeOutcome> {
        let edit = match kind {
            IrKind::Storyboard => IrEdit::Storyboard(parse_body::<Storyboard>(body)?),
            IrKind::DataModel => IrEdit::DataModel(parse_body::<DataModel>(body)?),
            IrKind::Skeleton(view) => {
                let skel: GuiSkeleton = parse_body(body)?;
                if &skel.view_name != view {
                    return Err(ServiceError::invalid(
                        "view_mismatch",
                        "viewName",
                        format!("document is for '{}', the path names '{view}'", skel.view_name),
                    ));
                }
                IrEdit::Skeleton(skel)
            }
        };
        self.mutate(id, |session, engine| {
            let (project, steps) = engine.apply_edit(&edit, &session.project)?;
            let diff = diff_project(&session.project, &project);
            let mut next = session.clone();
            next.project = project;
            next.generated = None;
            let outcome = ChangeOutcome {
                phase: next.phase(),
                reply: describe(&diff),
                diff,
                steps,
            };
            Ok((next, outcome))
        })
    }

    pub fn generate(&self, id: &str) -> Result<GenerateSummary> {
        self.mutate(id, |session, engine| {
            if session.phase() == Phase::Empty {
                return Err(ServiceError::invalid("empty_project", "storyboard", "send a first message before generating"));
            }
            let (gp, steps) = engine.generate_code(&session.project)?;
            let mut next = session.clone();
            next.project.history.extend(steps);
            let summary = GenerateSummary {
                phase: Phase::Generated,
                view_count: gp.metrics.view_count,
                lines_of_code: gp.metrics.lines_of_code,
                views: gp.views.iter().map(|v| v.swift_ui_view_name.clone()).collect(),
                utilities: gp.utilities.iter().map(|u| u.name.clone()).collect(),
            };
            next.generated = Some(gp);
            Ok((next, summary))
        })
    }

    fn generated(&self, id: &str) -> Result<Session> {
        let session = self.get(id)?;
        if session.generated.is_none() {
            return Err(ServiceError::invalid("not_generated", "generated", "generate code first"));
        }
        Ok(session)
    }

    /// Zip archive of the export layout.
    pub fn export(&self, id: &str) -> Result<Vec<u8>> {
        let session = self.generated(id)?;
        let gp = session.generated.as_ref().expect("checked");
        export_archive(gp, &session.project.data_model, &session.app_name).map_err(|e| ServiceError::Export(e.to_string()))
    }

    pub fn report(&self, id: &str) -> Result<ErrorReport> {
        let session = self.generated(id)?;
        let gp = session.generated.as_ref().expect("checked");
        let findings = check_navigation(gp, &session.project.storyboard);
        Ok(summarize(&findings, None).expect("no log to parse"))
    }
}
