//! Planning through a remote chat-completion-style model endpoint.
//!
//! The request carries the task description as the system message and the
//! `Prompt: ...[ Keywords: ...]` body as the user message. The reply text is
//! parsed with [`crate::grammar::parse_layout`]; a malformed reply is
//! retried up to `max_retries` times.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{LayoutPlanner, PlanError, PlanOutcome, PlanRequest};
use crate::grammar::{parse_layout, ParseMode, PlannerPrompt, ReprVariant};
use crate::layout::{validate_layout, Canvas, Layout};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        Self { role: role.to_string(), content: content.into() }
    }
}

/// Request body: `{"messages": [{"role", "content"}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
}

#[derive(Debug, Clone, Deserialize)]
struct ChoiceMessage {
    content: String,
}

#[derive(Debug, Clone, Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

/// Response body. The documented form is `{"content": "..."}`; the
/// OpenAI-style `{"choices": [{"message": {"content": "..."}}]}` is accepted
/// too.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RawResponse")]
pub struct ChatResponse {
    pub content: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawResponse {
    Plain { content: String },
    Choices { choices: Vec<Choice> },
}

impl From<RawResponse> for ChatResponse {
    fn from(raw: RawResponse) -> Self {
        match raw {
            RawResponse::Plain { content } => ChatResponse { content },
            RawResponse::Choices { choices } => ChatResponse {
                content: choices.into_iter().next().map(|c| c.message.content).unwrap_or_default(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("unreachable: {0}")]
    Unreachable(String),
    #[error("timed out")]
    Timeout,
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("undecodable response: {0}")]
    Decode(String),
}

/// Sends one chat request. Implementations must be safe to share across
/// threads.
pub trait ChatTransport: Send + Sync {
    fn send(&self, endpoint: &str, request: &ChatRequest, timeout: Duration) -> Result<ChatResponse, TransportError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub endpoint: String,
    #[serde(with = "millis")]
    pub timeout: Duration,
    pub max_retries: u32,
    pub mode: ParseMode,
    #[serde(default)]
    pub variant: ReprVariant,
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

impl BackendConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: Duration::from_secs(30),
            max_retries: 2,
            mode: ParseMode::Strict,
            variant: ReprVariant::Ltrb,
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.timeout.is_zero() {
            return Err(PlanError::InvalidRequest("backend timeout must be positive".into()));
        }
        if self.endpoint.trim().is_empty() {
            return Err(PlanError::InvalidRequest("backend endpoint is empty".into()));
        }
        Ok(())
    }
}

/// One request/response pair, kept for audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub request: ChatRequest,
    pub response: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendPlan {
    pub layout: Layout,
    pub warnings: Vec<String>,
    pub transcript: Vec<Exchange>,
}

pub fn chat_request(request: &PlanRequest) -> ChatRequest {
    let prompt = PlannerPrompt::new(request.prompt.clone(), request.keywords.clone());
    ChatRequest { messages: vec![ChatMessage::new("system", prompt.description.clone()), ChatMessage::new("user", prompt.body())] }
}

fn interpret(text: &str, config: &BackendConfig, canvas: Canvas) -> Result<(Layout, Vec<String>), String> {
    let parsed = parse_layout(text, config.variant, canvas, config.mode).map_err(|e| e.to_string())?;
    let warnings: Vec<String> = parsed.warnings.iter().map(ToString::to_string).collect();
    if parsed.layout.is_empty() && !text.trim().is_empty() {
        return Err(warnings.last().cloned().unwrap_or_else(|| "no text lines in response".into()));
    }
    let report = validate_layout(&parsed.layout);
    if let Some(v) = report.errors().next() {
        return Err(v.to_string());
    }
    Ok((parsed.layout, warnings))
}

/// Plans through `transport`, retrying malformed replies.
pub fn plan_via_backend(
    request: &PlanRequest,
    config: &BackendConfig,
    transport: &dyn ChatTransport,
    canvas: Canvas,
) -> Result<BackendPlan, PlanError> {
    request.validate()?;
    config.validate()?;
    let body = chat_request(request);
    let mut transcript = Vec::new();
    let attempts = config.max_retries + 1;
    let mut last_error = String::new();
    for _ in 0..attempts {
        let reply = transport.send(&config.endpoint, &body, config.timeout);
        let text = match reply {
            Ok(r) => r.content,
            Err(TransportError::Timeout) => return Err(PlanError::Timeout),
            Err(TransportError::Decode(e)) => {
                transcript.push(Exchange { request: body.clone(), response: None, error: Some(e.clone()) });
                last_error = e;
                continue;
            }
            Err(e) => return Err(PlanError::BackendUnreachable(e.to_string())),
        };
        match interpret(&text, config, canvas) {
            Ok((layout, warnings)) => {
                transcript.push(Exchange { request: body.clone(), response: Some(text), error: None });
                return Ok(BackendPlan { layout, warnings, transcript });
            }
            Err(e) => {
                transcript.push(Exchange { request: body.clone(), response: Some(text), error: Some(e.clone()) });
                last_error = e;
            }
        }
    }
    Err(PlanError::BackendMalformed { attempts, last_error })
}

/// [`plan_via_backend`] as a [`LayoutPlanner`].
pub struct BackendPlanner<T> {
    pub config: BackendConfig,
    pub transport: T,
}

impl<T: ChatTransport> BackendPlanner<T> {
    pub fn new(config: BackendConfig, transport: T) -> Self {
        Self { config, transport }
    }
}

impl<T: ChatTransport> LayoutPlanner for BackendPlanner<T> {
    fn plan(&self, request: &PlanRequest, canvas: Canvas) -> Result<PlanOutcome, PlanError> {
        let plan = plan_via_backend(request, &self.config, &self.transport, canvas)?;
        Ok(PlanOutcome { layout: plan.layout, warnings: plan.warnings, transcript: plan.transcript })
    }
}
