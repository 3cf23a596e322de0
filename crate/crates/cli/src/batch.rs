//! `athena run`: initial prompt, change prompts, code generation, export and
//! check, all in one pass.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use athena_core::analysis::{check_navigation, summarize, ErrorReport};
use athena_core::codegen::{export_archive, export_project};
use athena_core::ir::{serialize_ir, to_canonical_text};
use athena_core::llm::{load_provider, Provider};
use athena_core::plan::{Engine, EngineOptions, ExecutedStep, PlanError};

use crate::exit;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BatchScript {
    #[serde(default = "default_app_name")]
    pub app_name: String,
    pub initial_prompt: String,
    #[serde(default)]
    pub change_prompts: Vec<String>,
    /// providers.json, relative to the script file.
    #[serde(default)]
    pub providers: Option<PathBuf>,
    #[serde(default)]
    pub provider: Option<String>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_app_name() -> String {
    "App".to_string()
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    BadInput(String),
    #[error("{stage} stage failed: {source}")]
    Pipeline { stage: String, source: PlanError },
    #[error("{0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::BadInput(_) => exit::BAD_INPUT,
            RunError::Pipeline { .. } | RunError::Io(_) => exit::PIPELINE,
        }
    }
}

fn pipeline(e: PlanError) -> RunError {
    let stage = e.stage().map_or_else(|| "input".to_string(), |s| s.to_string());
    RunError::Pipeline { stage, source: e }
}

fn io(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

impl BatchScript {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let script: BatchScript =
            serde_json::from_str(text).map_err(|e| RunError::BadInput(format!("batch script: {e}")))?;
        if script.initial_prompt.trim().is_empty() {
            return Err(RunError::BadInput("batch script: initialPrompt is empty".into()));
        }
        Ok(script)
    }

    /// Reads a script and resolves its providers path against the script's
    /// directory.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::BadInput(format!("{}: {e}", path.display())))?;
        let mut script = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = &script.providers {
            if p.is_relative() {
                script.providers = Some(base.join(p));
            }
        }
        Ok(script)
    }

    /// The provider named by the script, or by `name` when given.
    pub fn provider(&self, name: Option<&str>) -> Result<Arc<dyn Provider>, RunError> {
        let path = self
            .providers
            .as_ref()
            .ok_or_else(|| RunError::BadInput("batch script names no providers file".into()))?;
        load_provider(path, name.or(self.provider.as_deref())).map_err(|e| RunError::BadInput(e.to_string()))
    }
}

/// The two per-app columns of the evaluation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub views: usize,
    pub lines_of_code: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub report: ErrorReport,
    pub archive: PathBuf,
    pub project_dir: PathBuf,
    pub steps: Vec<ExecutedStep>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> u8 {
        if self.report.navigation.total > 0 {
            exit::FINDINGS
        } else {
            exit::OK
        }
    }
}

/// Files written under `out_dir`:
///
/// ```text
/// project/            export layout plus manifest
/// <App>.zip           the same files as an archive
/// storyboard.json     the final storyboard, for `athena check`
/// report.json  metrics.json  session.log.jsonl
/// ```
pub fn run_batch(script: &BatchScript, provider: &dyn Provider, out_dir: &Path) -> Result<RunOutcome, RunError> {
    let options = EngineOptions::default();
    let engine = Engine::new(provider).with_options(&options);
    let (mut project, mut steps) = engine.initial_generate(&script.initial_prompt).map_err(pipeline)?;
    for prompt in &script.change_prompts {
        let (next, more) = engine.apply_request(prompt, &project).map_err(pipeline)?;
        project = next;
        steps.extend(more);
    }
    let (gp, more) = engine.generate_code(&project).map_err(pipeline)?;
    steps.extend(more);

    let findings = check_navigation(&gp, &project.storyboard);
    let report = summarize(&findings, None).expect("no log to parse");
    let metrics = RunMetrics {
        views: gp.metrics.view_count,
        lines_of_code: gp.metrics.lines_of_code,
    };

    fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;
    let project_dir = out_dir.join("project");
    export_project(&gp, &project.data_model, &script.app_name, &project_dir).map_err(|e| io(&project_dir, e))?;
    let archive_bytes = export_archive(&gp, &project.data_model, &script.app_name).map_err(|e| io(out_dir, e))?;
    let archive = out_dir.join(format!("{}.zip", script.app_name));
    let log: String = steps.iter().map(|s| s.to_json_line() + "\n").collect();
    for (path, bytes) in [
        (archive.clone(), archive_bytes),
        (out_dir.join("storyboard.json"), serialize_ir(&project.storyboard).into_bytes()),
        (out_dir.join("report.json"), report.to_json().into_bytes()),
        (out_dir.join("metrics.json"), to_canonical_text(&metrics).into_bytes()),
        (out_dir.join("session.log.jsonl"), log.into_bytes()),
    ] {
        fs::write(&path, bytes).map_err(|e| io(&path, e))?;
    }
    Ok(RunOutcome {
        metrics,
        report,
        archive,
        project_dir,
        steps,
    })
}
