//! JSON completions with bounded re-prompting.

use serde_json::Value;
use thiserror::Error;

use super::extract::extract_json;
use super::provider::{ChatMessage, CompletionRequest, Provider, ProviderError};
use super::template::TemplateError;
use crate::report::{Finding, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("provider error: {0}")]
    Provider(ProviderError),
    #[error("provider timed out")]
    Timeout,
    #[error("response still invalid after {attempts} attempt(s):\n{report}")]
    SchemaAfterRetries {
        attempts: usize,
        report: ValidationReport,
    },
    #[error(transparent)]
    Template(#[from] TemplateError),
}

impl LlmError {
    pub fn code(&self) -> &'static str {
        match self {
            LlmError::Provider(_) => "provider_error",
            LlmError::Timeout => "timeout",
            LlmError::SchemaAfterRetries { .. } => "schema_error_after_retries",
            LlmError::Template(TemplateError::UnboundPlaceholder(_)) => "unbound_placeholder",
            LlmError::Template(_) => "template_error",
        }
    }

    pub fn report(&self) -> Option<&ValidationReport> {
        match self {
            LlmError::SchemaAfterRetries { report, .. } => Some(report),
            _ => None,
        }
    }
}

impl From<ProviderError> for LlmError {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::Timeout => LlmError::Timeout,
            other => LlmError::Provider(other),
        }
    }
}

/// Raw material of one logical call, kept for the step log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub call_ids: Vec<String>,
    pub responses: Vec<String>,
}

impl Transcript {
    pub fn last_call_id(&self) -> Option<&str> {
        self.call_ids.last().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JsonCompletion<T> {
    pub value: T,
    pub transcript: Transcript,
}

/// Requests a completion and parses it with `parse`, re-prompting with the
/// findings up to the provider's retry limit.
pub fn complete_json<T>(
    provider: &dyn Provider,
    request: CompletionRequest,
    parse: impl FnMut(Value) -> Result<T, ValidationReport>,
) -> Result<JsonCompletion<T>, LlmError> {
    let retries = provider.limits().retries as usize;
    complete_json_with(provider, request, |_, reprompts| reprompts < retries, parse)
}

/// Like [`complete_json`] with an explicit budget of re-prompts.
pub fn complete_json_budget<T>(
    provider: &dyn Provider,
    request: CompletionRequest,
    max_reprompts: usize,
    parse: impl FnMut(Value) -> Result<T, ValidationReport>,
) -> Result<JsonCompletion<T>, LlmError> {
    complete_json_with(provider, request, |_, done| done < max_reprompts, parse)
}

/// General form: `may_retry(report, reprompts_so_far)` decides whether a
/// failed attempt earns another prompt.
pub fn complete_json_with<T>(
    provider: &dyn Provider,
    request: CompletionRequest,
    mut may_retry: impl FnMut(&ValidationReport, usize) -> bool,
    mut parse: impl FnMut(Value) -> Result<T, ValidationReport>,
) -> Result<JsonCompletion<T>, LlmError> {
    let mut request = request;
    let mut transcript = Transcript::default();
    let mut reprompts = 0;
    loop {
        let completion = provider.complete(&request)?;
        transcript.call_ids.push(completion.call_id.clone());
        transcript.responses.push(completion.text.clone());

        let report = match extract_json(&completion.text) {
            Ok(extracted) => match parse(extracted.value) {
                Ok(value) => return Ok(JsonCompletion { value, transcript }),
                Err(report) => report,
            },
            Err(e) => ValidationReport::single(Finding::error("invalid_json", "", e.to_string())),
        };

        if !may_retry(&report, reprompts) {
            return Err(LlmError::SchemaAfterRetries {
                attempts: transcript.responses.len(),
                report,
            });
        }
        reprompts += 1;
        request.messages.push(ChatMessage::assistant(completion.text));
        request.messages.push(ChatMessage::user(format!(
            "Your previous response could not be used:\n{}\n\nReturn the corrected response as a single JSON value and nothing else.",
            report.to_text()
        )));
    }
}
