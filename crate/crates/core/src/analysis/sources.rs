//! Checking a SwiftUI project on disk against a storyboard file.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::navigation::{check_navigation, NavigationFinding};
use crate::codegen::{declares_type, GeneratedProject, GeneratedView, Utility};
use crate::ir::{deserialize_ir, validate_storyboard, IrError, Storyboard};
use crate::report::ValidationReport;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("storyboard {path}: {source}")]
    Storyboard { path: PathBuf, source: IrError },
    #[error("storyboard {path} is invalid:\n{report}")]
    InvalidStoryboard { path: PathBuf, report: ValidationReport },
}

impl CheckError {
    pub fn code(&self) -> &'static str {
        match self {
            CheckError::Io { .. } => "io_error",
            CheckError::Storyboard { source, .. } => source.code(),
            CheckError::InvalidStoryboard { .. } => "storyboard_invalid",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CheckError + '_ {
    move |source| CheckError::Io { path: path.to_path_buf(), source }
}

/// Every `.swift` file under `dir`, in path order.
fn swift_files(dir: &Path) -> Result<Vec<PathBuf>, CheckError> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(io_err(&d))? {
            let path = entry.map_err(io_err(&d))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "swift") {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn load_storyboard(path: &Path) -> Result<Storyboard, CheckError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let sb: Storyboard = deserialize_ir(&text).map_err(|source| CheckError::Storyboard {
        path: path.to_path_buf(),
        source,
    })?;
    let report = validate_storyboard(&sb);
    if !report.is_ok() {
        return Err(CheckError::InvalidStoryboard { path: path.to_path_buf(), report });
    }
    Ok(sb)
}

/// Reads the sources under `dir` as a generated project. A view's source is
/// the file named after it, else the first file declaring its type; the
/// remaining files become utilities.
pub fn load_sources(dir: &Path, sb: &Storyboard) -> Result<GeneratedProject, CheckError> {
    let mut files = Vec::new();
    for path in swift_files(dir)? {
        let code = fs::read_to_string(&path).map_err(io_err(&path))?;
        files.push((path, code, false));
    }
    let mut views = Vec::new();
    for node in &sb.nodes {
        let view = node.swift_ui_view_name.as_str();
        let by_name = files
            .iter()
            .position(|(p, _, used)| !used && p.file_stem().is_some_and(|s| s == view));
        let found = by_name.or_else(|| files.iter().position(|(_, code, used)| !used && declares_type(code, view)));
        if let Some(i) = found {
            files[i].2 = true;
            views.push(GeneratedView {
                id: node.id,
                name: node.name.clone(),
                swift_ui_view_name: view.to_string(),
                view_code: files[i].1.clone(),
            });
        }
    }
    let utilities = files
        .into_iter()
        .filter(|(_, _, used)| !used)
        .map(|(path, code, _)| Utility {
            name: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            code,
        })
        .collect();
    Ok(GeneratedProject::new(views, utilities))
}

/// Navigation findings for the project in `project_dir` against the
/// storyboard stored at `storyboard_path`.
pub fn check(project_dir: &Path, storyboard_path: &Path) -> Result<Vec<NavigationFinding>, CheckError> {
    let sb = load_storyboard(storyboard_path)?;
    let gp = load_sources(project_dir, &sb)?;
    Ok(check_navigation(&gp, &sb))
}
