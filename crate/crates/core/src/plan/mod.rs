//! Change plans and their cascade execution.

pub mod engine;
pub mod model;
pub mod project;

pub use engine::{execute_plan, plan_request, skeleton_report, Engine, EngineOptions, PlanError, StepSink};
pub use model::{
    resolve_file_ref, validate_plan, ChangePlan, ChangeType, Connection, DataModelChanges, FileRef,
    GuiSkeletonChanges, ScreenRef, StoryboardChanges, Target, TechnicalDescription,
};
pub use project::{
    cascade_ordered, describe_ir_edit, diff_project, DiffSet, ExecutedStep, IrEdit, NodeRef, Project,
    ProjectDiff, Stage,
};
