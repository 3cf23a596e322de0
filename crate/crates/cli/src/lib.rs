//! Command-line front end: batch runs, chat, checks and export.

pub mod batch;
pub mod chat;
pub mod check;
pub mod exit;

pub use batch::{run_batch, BatchScript, RunError, RunMetrics, RunOutcome};
pub use check::check_project;
