//! `/v1` HTTP endpoints.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | /v1/plan | `{prompt, keywords?, seed?, backend?}` | layout record |
//! | POST | /v1/sessions | same as plan | `{session_id, layout}` |
//! | GET | /v1/sessions/{id} | | session state |
//! | POST | /v1/sessions/{id}/edit | `{command}` | `{layout, warnings}` |
//! | POST | /v1/sessions/{id}/undo | | `{layout, warnings}` |
//! | POST | /v1/encode | `{prompt, layout, level?, variant?, L?}` | token record |
//! | POST | /v1/decode | `{ids, L?, variant?, level?, prompt_len?}` | `{prompt, layout}` |
//! | POST | /v1/eval | `{dataset? \| jsonl? \| path?, iou_threshold?, ...}` | metrics report |
//! | GET | /v1/health | | `{status, version}` |
//!
//! Errors are `{"error": {"code", "message"}}`.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use glyphplan_core::eval::{parse_dataset, run_benchmark_records, BenchmarkConfig, DatasetRecord, EvalError, MetricsReport};
use glyphplan_core::planner::{LayoutPlanner, PlanError, PlanRequest};
use glyphplan_core::record::{LayoutRecord, RecordError};
use glyphplan_core::session::{parse_command, Session, SessionCommand, SessionError, SessionState};
use glyphplan_core::tokenizer::{
    decode, encode, EncodeOptions, TokenRecord, TokenizationLevel, TokenizeError, Vocabulary, DEFAULT_MAX_LEN, QUAD_MAX_LEN,
};
use glyphplan_core::{Canvas, Layout, ReprVariant};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::config::ServiceConfig;
use crate::store::SessionStore;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    pub heuristic: Arc<dyn LayoutPlanner>,
    pub backend: Option<Arc<dyn LayoutPlanner>>,
    pub vocab: Arc<Vocabulary>,
    pub canvas: Canvas,
}

impl AppState {
    /// The backend when configured, unless the request opts out; asking
    /// for an unconfigured backend is an error.
    pub fn planner(&self, backend: Option<bool>) -> Result<Arc<dyn LayoutPlanner>, ApiError> {
        match (backend, &self.backend) {
            (Some(true), None) => {
                Err(ApiError::new(StatusCode::BAD_REQUEST, "backend_not_configured", "no planner backend is configured"))
            }
            (Some(false), _) | (None, None) => Ok(self.heuristic.clone()),
            (_, Some(b)) => Ok(b.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub error: ErrorBody,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn bad_request(code: &'static str, message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message.to_string())
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "session_not_found", format!("no session {id:?}"))
    }

    fn internal(message: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorEnvelope { error: ErrorBody { code: self.code.to_string(), message: self.message } };
        (self.status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        match r.status() {
            StatusCode::PAYLOAD_TOO_LARGE => Self::new(StatusCode::PAYLOAD_TOO_LARGE, "payload_too_large", r.body_text()),
            StatusCode::UNSUPPORTED_MEDIA_TYPE => {
                Self::new(StatusCode::UNSUPPORTED_MEDIA_TYPE, "unsupported_media_type", r.body_text())
            }
            _ => Self::bad_request("malformed_request", r.body_text()),
        }
    }
}

impl From<PlanError> for ApiError {
    fn from(e: PlanError) -> Self {
        let code = match e {
            PlanError::InvalidRequest(_) => "invalid_request",
            PlanError::InvalidKeyword { .. } => "invalid_keyword",
            PlanError::LayoutInfeasible { .. } => {
                return Self::new(StatusCode::UNPROCESSABLE_ENTITY, "layout_infeasible", e.to_string())
            }
            PlanError::BackendUnreachable(_) => return Self::new(StatusCode::BAD_GATEWAY, "backend_unreachable", e.to_string()),
            PlanError::BackendMalformed { .. } => return Self::new(StatusCode::BAD_GATEWAY, "backend_malformed", e.to_string()),
            PlanError::Timeout => return Self::new(StatusCode::GATEWAY_TIMEOUT, "backend_timeout", e.to_string()),
        };
        Self::bad_request(code, e)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let code = match e {
            SessionError::Plan(p) => return p.into(),
            SessionError::IndexOutOfRange { .. } => "index_out_of_range",
            SessionError::InvalidBox(_) => "invalid_box",
            SessionError::EmptyContent => "empty_content",
            SessionError::InvalidContent(_) => "invalid_content",
            SessionError::NoSpace => return Self::new(StatusCode::CONFLICT, "no_space", e.to_string()),
            SessionError::NothingToUndo => return Self::new(StatusCode::CONFLICT, "nothing_to_undo", e.to_string()),
        };
        Self::bad_request(code, e)
    }
}

impl From<TokenizeError> for ApiError {
    fn from(e: TokenizeError) -> Self {
        let code = match e {
            TokenizeError::SequenceTooLong { .. } => "sequence_too_long",
            TokenizeError::NonAlphabetSymbol(_) | TokenizeError::EmptyKeyword => "invalid_keyword",
            TokenizeError::Inconvertible { .. } => "inconvertible_box",
            TokenizeError::AngleDisabled => "angle_disabled",
            TokenizeError::Structure(_) => "malformed_sequence",
            TokenizeError::Bpe(_) => "tokenizer_error",
        };
        Self::bad_request(code, e)
    }
}

impl From<EvalError> for ApiError {
    fn from(e: EvalError) -> Self {
        let code = match e {
            EvalError::EmptyDataset => "empty_dataset",
            EvalError::DatasetParseError { .. } => "dataset_parse_error",
            EvalError::Io { .. } => "dataset_unreadable",
            EvalError::InvalidThreshold(_) => "invalid_threshold",
            EvalError::Tokenize { .. } => "tokenizer_error",
        };
        Self::bad_request(code, e)
    }
}

impl From<RecordError> for ApiError {
    fn from(e: RecordError) -> Self {
        Self::bad_request("invalid_layout", e)
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(ApiError::from)
}

/// Runs blocking work (planner calls may block on the network).
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

/// Layout record in the representation of the layout's own boxes.
pub fn record_of(prompt: &str, layout: &Layout) -> Result<LayoutRecord, RecordError> {
    let repr = layout.lines.first().map(|l| ReprVariant::of(&l.bbox)).unwrap_or_default();
    LayoutRecord::from_layout(prompt, layout, repr)
}

#[derive(Debug, Clone, Deserialize)]
pub struct PlanBody {
    pub prompt: String,
    #[serde(default)]
    pub keywords: Option<Vec<String>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub backend: Option<bool>,
}

impl PlanBody {
    fn request(&self) -> PlanRequest {
        PlanRequest { prompt: self.prompt.clone(), keywords: self.keywords.clone(), seed: self.seed.unwrap_or(0) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanReply {
    #[serde(flatten)]
    pub record: LayoutRecord,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

async fn plan(State(state): State<AppState>, payload: Result<Json<PlanBody>, JsonRejection>) -> ApiResult<PlanReply> {
    let b = body(payload)?;
    let planner = state.planner(b.backend)?;
    let canvas = state.canvas;
    let request = b.request();
    let outcome = blocking(move || planner.plan(&request, canvas).map_err(ApiError::from)).await?;
    Ok(Json(PlanReply { record: record_of(&b.prompt, &outcome.layout)?, warnings: outcome.warnings }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub layout: LayoutRecord,
}

async fn create_session(
    State(state): State<AppState>,
    payload: Result<Json<PlanBody>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let b = body(payload)?;
    let planner = state.planner(b.backend)?;
    let canvas = state.canvas;
    let request = b.request();
    let session = blocking(move || Session::create(request, planner.as_ref(), canvas).map_err(ApiError::from)).await?;
    let reply = SessionCreated { session_id: session.id().to_string(), layout: record_of(&b.prompt, session.current())? };
    state.store.insert(session);
    state.store.persist().map_err(ApiError::internal)?;
    Ok((StatusCode::CREATED, Json(reply)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionState> {
    let slot = state.store.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let session = slot.snapshot();
    Ok(Json(session.to_state()?))
}

#[derive(Debug, Clone, Deserialize)]
pub struct EditBody {
    pub command: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EditReply {
    pub layout: LayoutRecord,
    pub warnings: Vec<String>,
}

async fn apply(state: AppState, id: String, command: SessionCommand) -> ApiResult<EditReply> {
    let slot = state.store.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let planner = state.heuristic.clone();
    let backend = state.backend.clone();
    let reply = blocking(move || {
        let _serial = slot.edit.lock().map_err(ApiError::internal)?;
        let mut next = slot.snapshot();
        let planner = backend.unwrap_or(planner);
        let warnings = next.apply_command(command, planner.as_ref())?;
        let layout = record_of(&next.request().prompt, next.current())?;
        *slot.state.write().map_err(ApiError::internal)? = next;
        Ok(EditReply { layout, warnings })
    })
    .await?;
    state.store.persist().map_err(ApiError::internal)?;
    Ok(Json(reply))
}

async fn edit_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<EditBody>, JsonRejection>,
) -> ApiResult<EditReply> {
    let b = body(payload)?;
    if state.store.get(&id).is_none() {
        return Err(ApiError::not_found(&id));
    }
    let command = parse_command(&b.command).map_err(|e| ApiError::bad_request("invalid_command", e))?;
    apply(state, id, command).await
}

async fn undo_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<EditReply> {
    apply(state, id, SessionCommand::Undo).await
}

#[derive(Debug, Clone, Deserialize)]
pub struct EncodeBody {
    #[serde(default)]
    pub prompt: String,
    pub layout: LayoutRecord,
    #[serde(default)]
    pub level: TokenizationLevel,
    #[serde(default)]
    pub variant: Option<ReprVariant>,
    #[serde(default, rename = "L")]
    pub max_len: Option<usize>,
}

pub fn default_max_len(variant: ReprVariant) -> usize {
    if variant == ReprVariant::Quad {
        QUAD_MAX_LEN
    } else {
        DEFAULT_MAX_LEN
    }
}

async fn encode_layout(State(state): State<AppState>, payload: Result<Json<EncodeBody>, JsonRejection>) -> ApiResult<TokenRecord> {
    let b = body(payload)?;
    let layout = b.layout.to_layout()?;
    let variant = b.variant.unwrap_or(b.layout.repr);
    let max_len = b.max_len.unwrap_or_else(|| default_max_len(variant));
    let seq = encode(&b.prompt, &layout, &state.vocab, EncodeOptions { level: b.level, variant }, max_len)?;
    Ok(Json(seq.to_record()))
}

#[derive(Debug, Clone, Deserialize)]
pub struct DecodeBody {
    pub ids: Vec<u32>,
    #[serde(default, rename = "L")]
    pub max_len: Option<usize>,
    #[serde(default)]
    pub variant: ReprVariant,
    #[serde(default)]
    pub level: TokenizationLevel,
    #[serde(default)]
    pub prompt_len: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecodeReply {
    pub prompt: String,
    pub layout: LayoutRecord,
}

async fn decode_ids(State(state): State<AppState>, payload: Result<Json<DecodeBody>, JsonRejection>) -> ApiResult<DecodeReply> {
    let b = body(payload)?;
    let record = TokenRecord {
        max_len: b.max_len.unwrap_or(b.ids.len()),
        ids: b.ids,
        variant: b.variant,
        level: b.level,
        prompt_len: b.prompt_len,
    };
    let seq = record.into_sequence(&state.vocab)?;
    let (prompt, layout) = decode(&seq, &state.vocab)?;
    let layout = LayoutRecord::from_layout(prompt.clone(), &layout, b.variant)?;
    Ok(Json(DecodeReply { prompt, layout }))
}

#[derive(Debug, Clone, Deserialize)]
pub struct EvalBody {
    #[serde(default)]
    pub dataset: Option<Vec<DatasetRecord>>,
    #[serde(default)]
    pub jsonl: Option<String>,
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub iou_threshold: Option<f64>,
    #[serde(default)]
    pub case_sensitive: bool,
    #[serde(default)]
    pub lengths: Option<Vec<usize>>,
    #[serde(default)]
    pub level: TokenizationLevel,
}

async fn eval_dataset(State(state): State<AppState>, payload: Result<Json<EvalBody>, JsonRejection>) -> ApiResult<MetricsReport> {
    let b = body(payload)?;
    let defaults = BenchmarkConfig::default();
    let config = BenchmarkConfig {
        iou_threshold: b.iou_threshold.unwrap_or(defaults.iou_threshold),
        case_sensitive: b.case_sensitive,
        lengths: b.lengths.unwrap_or(defaults.lengths),
        level: b.level,
    };
    let vocab = state.vocab.clone();
    let report = blocking(move || {
        let records = match (b.dataset, b.jsonl, b.path) {
            (Some(records), None, None) => records,
            (None, Some(text), None) => parse_dataset(&text)?,
            (None, None, Some(path)) => {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| EvalError::Io { path: path.clone(), message: e.to_string() })?;
                parse_dataset(&text)?
            }
            _ => return Err(ApiError::bad_request("invalid_request", "give exactly one of dataset, jsonl or path")),
        };
        Ok(run_benchmark_records(&records, &config, &vocab)?)
    })
    .await?;
    Ok(Json(report))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub sessions: usize,
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health { status: "ok".into(), version: env!("CARGO_PKG_VERSION").into(), sessions: state.store.len() })
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: AppState, config: &ServiceConfig) -> Router {
    let api = Router::new()
        .route("/v1/health", get(health))
        .route("/v1/plan", post(plan))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/edit", post(edit_session))
        .route("/v1/sessions/{id}/undo", post(undo_session))
        .route("/v1/encode", post(encode_layout))
        .route("/v1/decode", post(decode_ids))
        .route("/v1/eval", post(eval_dataset))
        .fallback(not_found)
        .layer(DefaultBodyLimit::max(config.body_limit))
        .with_state(state);
    match &config.ui_dir {
        Some(dir) => api.nest_service("/ui", ServeDir::new(dir)),
        None => api,
    }
}
