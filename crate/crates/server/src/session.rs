use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use athena_core::codegen::GeneratedProject;
use athena_core::plan::Project;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatEntry {
    pub role: Role,
    pub text: String,
    pub timestamp: DateTime<Utc>,
}

impl ChatEntry {
    pub fn now(role: Role, text: impl Into<String>) -> Self {
        Self {
            role,
            text: text.into(),
            timestamp: Utc::now(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Empty,
    Editing,
    Generated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    pub app_name: String,
    pub created_at: DateTime<Utc>,
    pub project: Project,
    pub chat: Vec<ChatEntry>,
    pub generated: Option<GeneratedProject>,
}

impl Session {
    pub fn new(id: &str, app_name: &str) -> Self {
        Self {
            id: id.to_string(),
            app_name: app_name.to_string(),
            created_at: Utc::now(),
            project: Project::default(),
            chat: Vec::new(),
            generated: None,
        }
    }

    /// Derived, never stored: empty without screens, generated with code.
    pub fn phase(&self) -> Phase {
        if self.project.storyboard.nodes.is_empty() {
            Phase::Empty
        } else if self.generated.is_some() {
            Phase::Generated
        } else {
            Phase::Editing
        }
    }
}

/// What `GET /sessions/{id}` and `POST /sessions` return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionSummary {
    pub id: String,
    pub app_name: String,
    pub phase: Phase,
    pub created_at: DateTime<Utc>,
    pub node_count: usize,
    pub chat: Vec<ChatEntry>,
}

impl From<&Session> for SessionSummary {
    fn from(s: &Session) -> Self {
        Self {
            id: s.id.clone(),
            app_name: s.app_name.clone(),
            phase: s.phase(),
            created_at: s.created_at,
            node_count: s.project.storyboard.nodes.len(),
            chat: s.chat.clone(),
        }
    }
}
