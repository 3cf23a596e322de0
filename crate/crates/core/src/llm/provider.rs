//! Model providers: an HTTP chat-completion client and a scripted replayer.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::template::TemplateId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// One model call. `template` and `target` identify the call for scripted
/// replay and logging; only `messages` reach an HTTP endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionRequest {
    pub template: TemplateId,
    pub target: Option<String>,
    pub messages: Vec<ChatMessage>,
}

impl CompletionRequest {
    pub fn new(template: TemplateId, messages: Vec<ChatMessage>) -> Self {
        Self {
            template,
            target: None,
            messages,
        }
    }

    pub fn with_target(mut self, target: impl Into<String>) -> Self {
        self.target = Some(target.into());
        self
    }

    /// All message contents joined, for assertions and logging.
    pub fn prompt_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub call_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("script has no response for {template}{}", .target.as_ref().map(|t| format!(" ({t})")).unwrap_or_default())]
    ScriptExhausted {
        template: TemplateId,
        target: Option<String>,
    },
    #[error("provider configuration: {0}")]
    Config(String),
}

impl ProviderError {
    pub fn status(&self) -> Option<u16> {
        match self {
            ProviderError::Status { status, .. } => Some(*status),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ProviderLimits {
    pub max_tokens: u32,
    pub timeout_secs: u64,
    /// Re-prompts allowed after an unusable response.
    pub retries: u32,
}

impl Default for ProviderLimits {
    fn default() -> Self {
        Self {
            max_tokens: 16_384,
            timeout_secs: 300,
            retries: 2,
        }
    }
}

/// A stateless request executor, safe to call from several threads.
pub trait Provider: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, ProviderError>;

    fn limits(&self) -> ProviderLimits {
        ProviderLimits::default()
    }
}

impl<P: Provider + ?Sized> Provider for Arc<P> {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, ProviderError> {
        (**self).complete(request)
    }

    fn limits(&self) -> ProviderLimits {
        (**self).limits()
    }
}

// ---------------------------------------------------------------------------
// Scripted provider
// ---------------------------------------------------------------------------

/// A canned response. `template` / `target` of `None` match any call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScriptedResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<TemplateId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub delay_ms: u64,
    /// Raw completion text. A non-string JSON value in a script file is
    /// stored as its compact serialization.
    #[serde(deserialize_with = "body_text")]
    pub body: String,
    /// Fails the call with this HTTP-like status instead of answering.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail_status: Option<u16>,
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

fn body_text<'de, D: serde::Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    Ok(match Value::deserialize(d)? {
        Value::String(s) => s,
        other => other.to_string(),
    })
}

impl ScriptedResponse {
    pub fn any(body: impl Into<String>) -> Self {
        Self {
            template: None,
            target: None,
            delay_ms: 0,
            body: body.into(),
            fail_status: None,
        }
    }

    pub fn for_template(template: TemplateId, body: impl Into<String>) -> Self {
        Self {
            template: Some(template),
            ..Self::any(body)
        }
    }

    pub fn for_target(template: TemplateId, target: &str, body: impl Into<String>) -> Self {
        Self {
            template: Some(template),
            target: Some(target.to_string()),
            ..Self::any(body)
        }
    }

    pub fn with_delay(mut self, ms: u64) -> Self {
        self.delay_ms = ms;
        self
    }

    pub fn failing(template: TemplateId, status: u16) -> Self {
        Self {
            fail_status: Some(status),
            ..Self::for_template(template, "")
        }
    }

    /// Match specificity: 2 for template and target, 1 for template only,
    /// 0 for a wildcard; `None` when it does not apply.
    fn specificity(&self, request: &CompletionRequest) -> Option<u8> {
        if !self.template.is_none_or(|t| t == request.template) {
            return None;
        }
        match self.target.as_deref() {
            Some(t) if Some(t) != request.target.as_deref() => None,
            Some(_) => Some(2),
            None => Some(u8::from(self.template.is_some())),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Script {
    pub responses: Vec<ScriptedResponse>,
}

impl Script {
    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Accepts `{"responses": [...]}` or a bare array.
    pub fn parse(text: &str) -> Result<Self, ProviderError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| ProviderError::Config(format!("script: {e}")))?;
        let value = match value {
            Value::Array(_) => serde_json::json!({ "responses": value }),
            other => other,
        };
        serde_json::from_value(value).map_err(|e| ProviderError::Config(format!("script: {e}")))
    }
}

/// Replays canned responses. Each call takes the first queued response whose
/// template and target match, so replay is deterministic even when calls for
/// distinct targets arrive concurrently.
#[derive(Debug)]
pub struct ScriptedProvider {
    queue: Mutex<VecDeque<(usize, ScriptedResponse)>>,
    calls: Mutex<Vec<CompletionRequest>>,
    limits: ProviderLimits,
}

impl ScriptedProvider {
    pub fn new(responses: Vec<ScriptedResponse>) -> Result<Self, ProviderError> {
        if responses.is_empty() {
            return Err(ProviderError::Config(
                "a scripted provider needs at least one response".into(),
            ));
        }
        Ok(Self {
            queue: Mutex::new(responses.into_iter().enumerate().collect()),
            calls: Mutex::new(Vec::new()),
            limits: ProviderLimits::default(),
        })
    }

    pub fn from_script(script: Script) -> Result<Self, ProviderError> {
        Self::new(script.responses)
    }

    pub fn with_limits(mut self, limits: ProviderLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.limits.retries = retries;
        self
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().expect("queue lock").len()
    }

    /// Requests received so far, in arrival order.
    pub fn calls(&self) -> Vec<CompletionRequest> {
        self.calls.lock().expect("calls lock").clone()
    }
}

impl Provider for ScriptedProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, ProviderError> {
        self.calls.lock().expect("calls lock").push(request.clone());
        let (index, response) = {
            let mut queue = self.queue.lock().expect("queue lock");
            // Most specific match first, queue order among equals.
            let pos = queue
                .iter()
                .enumerate()
                .filter_map(|(i, (_, r))| r.specificity(request).map(|s| (s, i)))
                .max_by_key(|&(s, i)| (s, std::cmp::Reverse(i)))
                .map(|(_, i)| i)
                .ok_or_else(|| {
                ProviderError::ScriptExhausted {
                    template: request.template,
                    target: request.target.clone(),
                }
            })?;
            queue.remove(pos).expect("position is in range")
        };
        if response.delay_ms > 0 {
            thread::sleep(Duration::from_millis(response.delay_ms));
        }
        if let Some(status) = response.fail_status {
            return Err(ProviderError::Status {
                status,
                body: "scripted failure".into(),
            });
        }
        Ok(Completion {
            text: response.body,
            call_id: format!("scripted-{index}"),
        })
    }

    fn limits(&self) -> ProviderLimits {
        self.limits
    }
}

// ---------------------------------------------------------------------------
// HTTP chat-completion provider
// ---------------------------------------------------------------------------

pub struct HttpChatProvider {
    model: String,
    endpoint: String,
    auth_ref: String,
    limits: ProviderLimits,
    client: reqwest::blocking::Client,
    counter: AtomicU64,
}

impl std::fmt::Debug for HttpChatProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpChatProvider")
            .field("model", &self.model)
            .field("endpoint", &self.endpoint)
            .field("auth_ref", &self.auth_ref)
            .finish_non_exhaustive()
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    max_tokens: u32,
}

impl HttpChatProvider {
    pub fn new(
        model: &str,
        endpoint: &str,
        auth_ref: &str,
        limits: ProviderLimits,
    ) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(limits.timeout_secs))
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(Self {
            model: model.to_string(),
            endpoint: endpoint.to_string(),
            auth_ref: auth_ref.to_string(),
            limits,
            client,
            counter: AtomicU64::new(0),
        })
    }

    fn credential(&self) -> Result<String, ProviderError> {
        std::env::var(&self.auth_ref).map_err(|_| {
            ProviderError::Config(format!("environment variable {} is not set", self.auth_ref))
        })
    }
}

impl Provider for HttpChatProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, ProviderError> {
        let credential = self.credential()?;
        let body = WireRequest {
            model: &self.model,
            messages: &request.messages,
            max_tokens: self.limits.max_tokens,
        };
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&credential)
            .json(&body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    ProviderError::Timeout
                } else {
                    ProviderError::Transport(scrub(&e.to_string(), &credential))
                }
            })?;
        let status = response.status();
        let text = response.text().map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Transport(scrub(&e.to_string(), &credential))
            }
        })?;
        if !status.is_success() {
            let mut body = scrub(&text, &credential);
            if body.len() > 512 {
                let cut = (0..=512).rev().find(|&i| body.is_char_boundary(i)).unwrap_or(0);
                body.truncate(cut);
            }
            return Err(ProviderError::Status {
                status: status.as_u16(),
                body,
            });
        }
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
        let content = value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| {
                ProviderError::MalformedResponse("missing choices[0].message.content".into())
            })?;
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let call_id = value
            .get("id")
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| format!("http-{n}"));
        Ok(Completion {
            text: content.to_string(),
            call_id,
        })
    }

    fn limits(&self) -> ProviderLimits {
        self.limits
    }
}

fn scrub(text: &str, secret: &str) -> String {
    if secret.is_empty() {
        text.to_string()
    } else {
        text.replace(secret, "[redacted]")
    }
}

// ---------------------------------------------------------------------------
// providers.json
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    HttpChat,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    #[serde(default)]
    pub model_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the credential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_ref: Option<String>,
    #[serde(default)]
    pub limits: ProviderLimits,
    /// Script file for scripted providers, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<PathBuf>,
}

impl ProviderConfig {
    /// Instantiates the provider. Relative script paths resolve against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<Arc<dyn Provider>, ProviderError> {
        match self.kind {
            ProviderKind::HttpChat => {
                let endpoint = self
                    .endpoint
                    .as_deref()
                    .filter(|e| !e.is_empty())
                    .ok_or_else(|| ProviderError::Config("http_chat needs an endpoint".into()))?;
                let auth_ref = self
                    .auth_ref
                    .as_deref()
                    .filter(|a| !a.is_empty())
                    .ok_or_else(|| ProviderError::Config("http_chat needs an authRef".into()))?;
                Ok(Arc::new(HttpChatProvider::new(
                    &self.model_name,
                    endpoint,
                    auth_ref,
                    self.limits,
                )?))
            }
            ProviderKind::Scripted => {
                let script = self
                    .script
                    .as_ref()
                    .ok_or_else(|| ProviderError::Config("scripted needs a script".into()))?;
                let script = Script::load(&base_dir.join(script))?;
                Ok(Arc::new(
                    ScriptedProvider::from_script(script)?.with_limits(self.limits),
                ))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvidersFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
    pub providers: BTreeMap<String, ProviderConfig>,
}

impl ProvidersFile {
    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))
    }

    /// Builds the named provider, or the default one when `name` is `None`.
    pub fn build(
        &self,
        name: Option<&str>,
        base_dir: &Path,
    ) -> Result<Arc<dyn Provider>, ProviderError> {
        let name = match name.or(self.default.as_deref()) {
            Some(n) => n.to_string(),
            None if self.providers.len() == 1 => {
                self.providers.keys().next().cloned().unwrap_or_default()
            }
            None => {
                return Err(ProviderError::Config(
                    "no provider named and no default set".into(),
                ))
            }
        };
        let config = self
            .providers
            .get(&name)
            .ok_or_else(|| ProviderError::Config(format!("unknown provider '{name}'")))?;
        config.build(base_dir)
    }
}

/// Loads `providers.json` and builds one provider from it.
pub fn load_provider(path: &Path, name: Option<&str>) -> Result<Arc<dyn Provider>, ProviderError> {
    let file = ProvidersFile::load(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    file.build(name, base)
}
