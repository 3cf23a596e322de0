//! Per-session directories on disk.
//!
//! ```text
//! <data>/<id>/current/
//!     session.json  storyboard.json  datamodel.json  skeletons/<View>.json
//!     scaffold.json  generated.json  chat.jsonl  session.log.jsonl
//! ```
//!
//! A commit writes a complete snapshot next to `current/` and swaps it in
//! with two renames, so a crash leaves either the old or the new state.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use athena_core::codegen::{DesignScaffold, GeneratedProject};
use athena_core::ir::{deserialize_ir, serialize_ir, to_canonical_text, DataModel, GuiSkeleton, IrError, Storyboard};
use athena_core::plan::{ExecutedStep, Project};

use crate::session::{ChatEntry, Session};

const CURRENT: &str = "current";
const STAGING: &str = "current.tmp";
const PREVIOUS: &str = "current.old";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

fn corrupt(path: &Path, message: impl ToString) -> StoreError {
    StoreError::Corrupt {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Meta {
    id: String,
    app_name: String,
    created_at: DateTime<Utc>,
}

/// Ids are generated by the service; anything else is never a path.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_at(&root))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn session_dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    /// Ids of every session with a committed snapshot.
    pub fn list(&self) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(io_at(&self.root))? {
            let entry = entry.map_err(io_at(&self.root))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            let dir = entry.path();
            if valid_id(&name) && (dir.join(CURRENT).is_dir() || dir.join(PREVIOUS).is_dir()) {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn save(&self, session: &Session) -> Result<(), StoreError> {
        let dir = self.session_dir(&session.id);
        let staging = dir.join(STAGING);
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(io_at(&staging))?;
        }
        write_snapshot(&staging, session)?;
        let current = dir.join(CURRENT);
        let previous = dir.join(PREVIOUS);
        if previous.exists() {
            fs::remove_dir_all(&previous).map_err(io_at(&previous))?;
        }
        if current.exists() {
            fs::rename(&current, &previous).map_err(io_at(&current))?;
        }
        fs::rename(&staging, &current).map_err(io_at(&staging))?;
        if previous.exists() {
            fs::remove_dir_all(&previous).map_err(io_at(&previous))?;
        }
        Ok(())
    }

    /// The last committed state, or `None` for an unknown id.
    pub fn load(&self, id: &str) -> Result<Option<Session>, StoreError> {
        if !valid_id(id) {
            return Ok(None);
        }
        let dir = self.session_dir(id);
        let current = dir.join(CURRENT);
        let previous = dir.join(PREVIOUS);
        // A crash between the two renames of a commit.
        if !current.exists() && previous.exists() {
            fs::rename(&previous, &current).map_err(io_at(&previous))?;
        }
        if !current.is_dir() {
            return Ok(None);
        }
        read_snapshot(&current).map(Some)
    }
}

fn write(path: &Path, text: &str) -> Result<(), StoreError> {
    fs::write(path, text).map_err(io_at(path))
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| serde_json::to_string(i).expect("record serializes") + "\n")
        .collect()
}

fn write_snapshot(dir: &Path, s: &Session) -> Result<(), StoreError> {
    let skel_dir = dir.join("skeletons");
    fs::create_dir_all(&skel_dir).map_err(io_at(&skel_dir))?;
    let meta = Meta {
        id: s.id.clone(),
        app_name: s.app_name.clone(),
        created_at: s.created_at,
    };
    write(&dir.join("session.json"), &to_canonical_text(&meta))?;
    write(&dir.join("storyboard.json"), &serialize_ir(&s.project.storyboard))?;
    write(&dir.join("datamodel.json"), &serialize_ir(&s.project.data_model))?;
    for skel in s.project.skeletons.values() {
        write(&skel_dir.join(format!("{}.json", skel.view_name)), &serialize_ir(skel))?;
    }
    if let Some(scaffold) = &s.project.design_scaffold {
        write(&dir.join("scaffold.json"), &to_canonical_text(scaffold))?;
    }
    if let Some(gp) = &s.generated {
        write(&dir.join("generated.json"), &to_canonical_text(gp))?;
    }
    write(&dir.join("chat.jsonl"), &jsonl(&s.chat))?;
    write(&dir.join("session.log.jsonl"), &jsonl(&s.project.history))?;
    Ok(())
}

fn read(path: &Path) -> Result<String, StoreError> {
    fs::read_to_string(path).map_err(io_at(path))
}

fn read_opt(path: &Path) -> Result<Option<String>, StoreError> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(Some(text)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(StoreError::Io { path: path.to_path_buf(), source }),
    }
}

fn ir<T: athena_core::ir::IrDocument>(path: &Path) -> Result<T, StoreError> {
    deserialize_ir(&read(path)?).map_err(|e: IrError| corrupt(path, e))
}

fn json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, StoreError> {
    serde_json::from_str(text).map_err(|e| corrupt(path, e))
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    let text = read_opt(path)?.unwrap_or_default();
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| corrupt(path, format!("line {}: {e}", i + 1))))
        .collect()
}

fn read_snapshot(dir: &Path) -> Result<Session, StoreError> {
    let meta_path = dir.join("session.json");
    let meta: Meta = json(&meta_path, &read(&meta_path)?)?;
    let storyboard: Storyboard = ir(&dir.join("storyboard.json"))?;
    let data_model: DataModel = ir(&dir.join("datamodel.json"))?;

    let skel_dir = dir.join("skeletons");
    let mut paths: Vec<PathBuf> = match fs::read_dir(&skel_dir) {
        Ok(entries) => entries.filter_map(|e| e.ok().map(|e| e.path())).collect(),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
        Err(source) => return Err(StoreError::Io { path: skel_dir, source }),
    };
    paths.sort();
    let mut skeletons = Vec::new();
    for path in paths.iter().filter(|p| p.extension().is_some_and(|e| e == "json")) {
        skeletons.push(ir::<GuiSkeleton>(path)?);
    }

    let mut project = Project::new(storyboard, data_model, skeletons);
    let scaffold_path = dir.join("scaffold.json");
    if let Some(text) = read_opt(&scaffold_path)? {
        project.design_scaffold = Some(json::<DesignScaffold>(&scaffold_path, &text)?);
    }
    project.history = read_jsonl::<ExecutedStep>(&dir.join("session.log.jsonl"))?;

    let generated_path = dir.join("generated.json");
    let generated = match read_opt(&generated_path)? {
        Some(text) => Some(json::<GeneratedProject>(&generated_path, &text)?),
        None => None,
    };
    Ok(Session {
        id: meta.id,
        app_name: meta.app_name,
        created_at: meta.created_at,
        project,
        chat: read_jsonl::<ChatEntry>(&dir.join("chat.jsonl"))?,
        generated,
    })
}
