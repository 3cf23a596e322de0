//! Model access: providers, prompt templates and JSON completion handling.

pub mod complete;
pub mod extract;
pub mod provider;
pub mod template;

pub use complete::{
    complete_json, complete_json_budget, complete_json_with, JsonCompletion, LlmError, Transcript,
};
pub use extract::{extract_json, ExtractError, Extracted};
pub use provider::{
    load_provider, ChatMessage, Completion, CompletionRequest, HttpChatProvider, Provider,
    ProviderConfig, ProviderError, ProviderKind, ProviderLimits, ProvidersFile, Role, Script,
    ScriptedProvider, ScriptedResponse,
};
pub use template::{default_templates, ExpectedSchema, PromptTemplate, RenderedPrompt, TemplateError, TemplateId, TemplateSet};

/// System message sent ahead of every rendered prompt.
pub const SYSTEM_PREAMBLE: &str = "You are part of a tool that builds SwiftUI apps from intermediate representations. Answer with exactly one JSON value and no other text.";
