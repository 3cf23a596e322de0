//! `athena check`: navigation findings for a project on disk, plus compiler
//! log categories when a log is given.

use std::fs;
use std::path::Path;

use athena_core::analysis::{check, summarize, ErrorReport};

/// Errors here are all bad input: unreadable paths, an invalid storyboard or
/// an unreadable log.
pub fn check_project(project_dir: &Path, storyboard: &Path, compile_log: Option<&Path>) -> Result<ErrorReport, String> {
    if !project_dir.is_dir() {
        return Err(format!("{}: not a directory", project_dir.display()));
    }
    let findings = check(project_dir, storyboard).map_err(|e| e.to_string())?;
    let log = match compile_log {
        Some(path) => Some(fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?),
        None => None,
    };
    summarize(&findings, log.as_deref()).map_err(|e| e.to_string())
}

/// One line per finding, then the totals.
pub fn render(report: &ErrorReport) -> String {
    let mut out = String::new();
    for f in &report.navigation.findings {
        out.push_str(&f.to_string());
        out.push('\n');
    }
    for (label, count) in report.compilation.counts.0.iter().filter(|(_, c)| *c > 0) {
        out.push_str(&format!("compilation: {label}: {count}\n"));
    }
    out.push_str(&format!(
        "navigation: {}  compilation: {}  total: {}\n",
        report.navigation.total, report.compilation.total, report.total
    ));
    out
}
