//! Chat-driven app construction over three intermediate representations
//! (storyboard, data model, GUI skeletons), lowered to a SwiftUI project.

pub mod analysis;
pub mod codegen;
pub mod ir;
pub mod llm;
pub mod plan;
pub mod report;
pub mod swift;

pub use report::{Finding, Severity, ValidationReport};
