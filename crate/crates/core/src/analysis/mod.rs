//! Navigation conformance checking and error reports.

pub mod navigation;
pub mod report;
pub mod sources;

pub use navigation::{check_navigation, NavigationCategory, NavigationFinding};
pub use report::{
    classify_diagnostic, parse_compilation_log, summarize, CompilationCategory, Counts, ErrorReport,
    LogParseError,
};
pub use sources::{check, load_sources, load_storyboard, CheckError};
