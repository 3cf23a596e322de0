//! Persistent design sessions over HTTP.
//!
//! Each session owns a project and a chat transcript. The first message
//! generates the project, later messages and direct IR edits change it, and
//! `generate` lowers it to SwiftUI. Every commit is written to disk before it
//! becomes visible, and each pipeline step is published to subscribers.

pub mod http;
pub mod service;
pub mod session;
pub mod store;

pub use http::{router, serve};
pub use service::{ChangeOutcome, GenerateSummary, IrKind, ServiceError, SessionService};
pub use session::{ChatEntry, Phase, Role, Session, SessionSummary};
pub use store::{Store, StoreError};
