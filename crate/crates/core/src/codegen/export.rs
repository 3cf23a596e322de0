//! Writing a generated project to disk or into a zip archive.

use std::collections::BTreeSet;
use std::fs;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use zip::write::SimpleFileOptions;

use super::output::GeneratedProject;
use crate::ir::DataModel;

pub const MANIFEST_FILE: &str = "athena.manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("io_error({path}): {message}")]
pub struct ExportError {
    pub path: String,
    pub message: String,
}

impl ExportError {
    fn at(path: &Path, e: impl std::fmt::Display) -> Self {
        Self {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn code(&self) -> &'static str {
        "io_error"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

/// A file of the export layout, path relative to the export root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportFile {
    pub path: String,
    pub contents: String,
}

fn file_stem(name: &str) -> String {
    let cleaned: String = name
        .trim()
        .chars()
        .map(|c| if matches!(c, '/' | '\\' | ':' | '\0') { '_' } else { c })
        .collect();
    match cleaned.as_str() {
        "" | "." | ".." => "Unnamed".to_string(),
        _ => cleaned,
    }
}

fn with_newline(text: &str) -> String {
    if text.is_empty() || text.ends_with('\n') {
        text.to_string()
    } else {
        format!("{text}\n")
    }
}

/// Every source file of the export, sorted by path.
pub fn export_files(gp: &GeneratedProject, dm: &DataModel, app_name: &str) -> Vec<ExportFile> {
    let app = file_stem(app_name);
    let mut files = Vec::new();
    for view in &gp.views {
        files.push(ExportFile {
            path: format!("{app}/Sources/Views/{}.swift", file_stem(&view.swift_ui_view_name)),
            contents: with_newline(&view.view_code),
        });
    }
    for entity in &dm.entities {
        let entity = entity.clone().completed();
        files.push(ExportFile {
            path: format!("{app}/Sources/Models/{}.swift", file_stem(&entity.name)),
            contents: with_newline(&entity.source_text),
        });
    }
    for utility in &gp.utilities {
        files.push(ExportFile {
            path: format!("{app}/Sources/Utilities/{}.swift", file_stem(&utility.name)),
            contents: with_newline(&utility.code),
        });
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    files.dedup_by(|a, b| a.path == b.path);
    files
}

pub fn manifest_for(files: &[ExportFile]) -> Manifest {
    Manifest {
        files: files
            .iter()
            .map(|f| ManifestEntry {
                path: f.path.clone(),
                sha256: hex::encode(Sha256::digest(f.contents.as_bytes())),
                bytes: f.contents.len() as u64,
            })
            .collect(),
    }
}

fn manifest_text(manifest: &Manifest) -> String {
    crate::ir::to_canonical_text(manifest)
}

/// Writes the export layout under `out_dir`, removing files a previous
/// export listed that this one no longer produces.
pub fn export_project(
    gp: &GeneratedProject,
    dm: &DataModel,
    app_name: &str,
    out_dir: &Path,
) -> Result<Manifest, ExportError> {
    let files = export_files(gp, dm, app_name);
    let manifest = manifest_for(&files);
    let manifest_path = out_dir.join(MANIFEST_FILE);

    let previous: Option<Manifest> = fs::read_to_string(&manifest_path)
        .ok()
        .and_then(|text| serde_json::from_str(&text).ok());
    fs::create_dir_all(out_dir).map_err(|e| ExportError::at(out_dir, e))?;
    for file in &files {
        let path = out_dir.join(&file.path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| ExportError::at(parent, e))?;
        }
        fs::write(&path, &file.contents).map_err(|e| ExportError::at(&path, e))?;
    }
    if let Some(previous) = previous {
        let current: BTreeSet<&str> = files.iter().map(|f| f.path.as_str()).collect();
        for stale in previous.files.iter().filter(|e| !current.contains(e.path.as_str())) {
            let path: PathBuf = out_dir.join(&stale.path);
            // Only paths inside the export root are touched.
            if !stale.path.contains("..") && path.is_file() {
                fs::remove_file(&path).map_err(|e| ExportError::at(&path, e))?;
            }
        }
    }
    fs::write(&manifest_path, manifest_text(&manifest)).map_err(|e| ExportError::at(&manifest_path, e))?;
    Ok(manifest)
}

/// The export layout plus manifest as a zip archive. Entries are sorted and
/// carry fixed timestamps, so identical inputs give identical bytes.
pub fn export_archive(gp: &GeneratedProject, dm: &DataModel, app_name: &str) -> Result<Vec<u8>, ExportError> {
    let files = export_files(gp, dm, app_name);
    let manifest = manifest_for(&files);
    let mut zip = zip::ZipWriter::new(Cursor::new(Vec::new()));
    let options = SimpleFileOptions::default()
        .compression_method(zip::CompressionMethod::Deflated)
        .last_modified_time(zip::DateTime::default())
        .unix_permissions(0o644);
    let zip_err = |path: &str, e: &dyn std::fmt::Display| ExportError {
        path: path.to_string(),
        message: e.to_string(),
    };
    let manifest_file = ExportFile {
        path: MANIFEST_FILE.to_string(),
        contents: manifest_text(&manifest),
    };
    for file in files.iter().chain(std::iter::once(&manifest_file)) {
        zip.start_file(file.path.as_str(), options)
            .map_err(|e| zip_err(&file.path, &e))?;
        zip.write_all(file.contents.as_bytes())
            .map_err(|e| zip_err(&file.path, &e))?;
    }
    let cursor = zip.finish().map_err(|e| zip_err("archive", &e))?;
    Ok(cursor.into_inner())
}
