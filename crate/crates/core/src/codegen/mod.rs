//! Lowering the IRs to a SwiftUI source project.

pub mod design;
pub mod export;
pub mod generate;
pub mod output;

pub use design::{
    is_hex_color, validate_navigation_plan, validate_scaffold, DesignScaffold, NavigationPlan, Size,
    Transition, TransitionType, ViewDesignSpec, ViewTransitions,
};
pub use export::{
    export_archive, export_files, export_project, manifest_for, ExportError, ExportFile, Manifest,
    ManifestEntry, MANIFEST_FILE,
};
pub use generate::{generate_code, initial_generate};
pub use output::{
    count_lines, declares_type, validate_generated, GeneratedProject, GeneratedView, Metrics, Utility,
};
