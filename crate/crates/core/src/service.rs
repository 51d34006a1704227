//! JSON-over-HTTP front end for [`SessionStore`].

use std::future::Future;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::audit::{AuditParams, CandidateId, Decision, Interpretation};
use crate::sampling::{BallotManifest, EscalationSchedule, SeededRng};
use crate::session::{write_events, SessionError, SessionStore, StatusView, DEFAULT_LIVE_SCHEDULE};
use crate::{Error, Result};

/// Builds audit parameters from the loose form used by the API and the CLI.
/// Exactly one of `delta` and `c` must be given.
pub fn build_params(
    n: u64,
    candidates: Vec<CandidateId>,
    delta: Option<u32>,
    c: Option<u64>,
    initial_sample_size: Option<u64>,
    cutover_fraction: Option<f64>,
) -> Result<AuditParams> {
    let mut params = match (delta, c) {
        (Some(delta), None) => AuditParams::new(n, candidates, delta)?,
        (None, Some(c)) => AuditParams::new(n, candidates, 0)?.with_c(c)?,
        _ => return Err(Error::param("give exactly one of delta or c")),
    };
    if let Some(size) = initial_sample_size {
        params = params.with_initial_sample_size(size)?;
    }
    if let Some(fraction) = cutover_fraction {
        params = params.with_cutover_fraction(fraction)?;
    }
    Ok(params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub n: u64,
    pub candidates: Vec<CandidateId>,
    #[serde(default)]
    pub delta: Option<u32>,
    #[serde(default)]
    pub c: Option<u64>,
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
    /// Manifest CSV path, relative to the data directory.
    #[serde(default)]
    pub manifest_ref: Option<String>,
    /// Inline manifest CSV, as an alternative to `manifest_ref`.
    #[serde(default)]
    pub manifest_csv: Option<String>,
    /// `per-ballot`, `step:K` or `geometric:F`; defaults to `step:10`.
    #[serde(default)]
    pub schedule: Option<String>,
    #[serde(default)]
    pub initial_sample_size: Option<u64>,
    #[serde(default)]
    pub cutover_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpretationRequest {
    pub ballot_id: String,
    pub interpretation: Interpretation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationResponse {
    pub decision: Decision,
    pub statistic: u128,
    pub threshold: u128,
    pub status: String,
    pub total_drawn: u64,
    pub pending: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawsResponse {
    pub ballot_ids: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloseRequest {
    #[serde(default)]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { code: code.to_string(), message: message.into() } }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::Invalid(Error::InvalidState(_)) => StatusCode::INTERNAL_SERVER_ERROR,
            SessionError::Invalid(_) => StatusCode::BAD_REQUEST,
            SessionError::UnknownBallot(_) | SessionError::UnknownSession(_) => StatusCode::NOT_FOUND,
            SessionError::DuplicateInterpretation(_) | SessionError::NotOpen(_) => StatusCode::CONFLICT,
            SessionError::CorruptLog { .. } | SessionError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!(error = %e, "request failed");
        }
        Self::new(status, e.code(), e.to_string())
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        SessionError::from(e).into()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

#[derive(Clone)]
struct AppState {
    store: Arc<SessionStore>,
}

/// Runs blocking store work (file writes and syncs) off the async workers.
async fn blocking<T: Send + 'static>(
    state: &AppState,
    f: impl FnOnce(&SessionStore) -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    let store = state.store.clone();
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

/// Routes for the session API. When `ui_dir` is given its files are served
/// for every other path, with `/` mapping to `index.html`.
pub fn router(store: Arc<SessionStore>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_status))
        .route("/sessions/{id}/interpretations", post(record_interpretation))
        .route("/sessions/{id}/draws", post(next_draws))
        .route("/sessions/{id}/close", post(close_session))
        .route("/sessions/{id}/events", get(session_events))
        .with_state(AppState { store });
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such resource")
}

/// Resolves a manifest reference inside the data directory. Absolute paths
/// and `..` components are refused.
fn resolve_manifest_ref(dir: &Path, reference: &str) -> Result<PathBuf> {
    let rel = Path::new(reference);
    if reference.is_empty() || !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return Err(Error::param(format!(
            "manifest_ref {reference:?} must be a relative path inside the data directory"
        )));
    }
    Ok(dir.join(rel))
}

fn load_manifest(store: &SessionStore, req: &CreateSessionRequest) -> Result<BallotManifest> {
    match (&req.manifest_ref, &req.manifest_csv) {
        (Some(reference), None) => BallotManifest::from_path(resolve_manifest_ref(store.dir(), reference)?),
        (None, Some(csv)) => BallotManifest::read_csv(csv.as_bytes()),
        _ => Err(Error::param("give exactly one of manifest_ref or manifest_csv")),
    }
}

async fn create_session(
    State(state): State<AppState>,
    body: std::result::Result<Json<CreateSessionRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<crate::session::CreatedSession>)> {
    let Json(req) = body?;
    let created = blocking(&state, move |store| {
        let params = build_params(
            req.n,
            req.candidates.clone(),
            req.delta,
            req.c,
            req.initial_sample_size,
            req.cutover_fraction,
        )?;
        let schedule = match &req.schedule {
            Some(s) => s.parse::<EscalationSchedule>()?,
            None => DEFAULT_LIVE_SCHEDULE,
        };
        let manifest = load_manifest(store, &req)?;
        Ok(store.create(params, &manifest, &SeededRng::new(req.seed, req.stream_id), schedule)?)
    })
    .await?;
    tracing::info!(session = %created.session_id, n = created.n, c = created.c, "session created");
    Ok((StatusCode::CREATED, Json(created)))
}

async fn session_status(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<StatusView>> {
    Ok(Json(state.store.read(&id, |s| s.status_view())?))
}

async fn record_interpretation(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: std::result::Result<Json<InterpretationRequest>, JsonRejection>,
) -> ApiResult<Json<InterpretationResponse>> {
    let Json(req) = body?;
    blocking(&state, move |store| {
        let decision = store.update(&id, |s| s.record_interpretation(&req.ballot_id, req.interpretation.clone()))?;
        let view = store.read(&id, |s| s.status_view())?;
        Ok(Json(InterpretationResponse {
            decision,
            statistic: view.statistic,
            threshold: view.threshold,
            status: view.status,
            total_drawn: view.total_drawn,
            pending: view.pending,
        }))
    })
    .await
}

async fn next_draws(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<DrawsResponse>> {
    blocking(&state, move |store| Ok(Json(DrawsResponse { ballot_ids: store.update(&id, |s| s.next_draws())? }))).await
}

async fn close_session(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: axum::body::Bytes,
) -> ApiResult<Json<StatusView>> {
    // The body is optional; an empty one closes with a default reason.
    let req: CloseRequest = if body.iter().all(u8::is_ascii_whitespace) {
        CloseRequest::default()
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))?
    };
    let reason = req.reason.unwrap_or_else(|| "closed by operator".to_string());
    blocking(&state, move |store| {
        store.update(&id, |s| s.close(reason))?;
        Ok(Json(store.read(&id, |s| s.status_view())?))
    })
    .await
}

async fn session_events(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let mut body = Vec::new();
    state.store.read(&id, |s| write_events(s.events(), &mut body))?.map_err(SessionError::from)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

/// Serves until `shutdown` resolves, then syncs every session log.
pub async fn serve(
    listener: tokio::net::TcpListener,
    store: Arc<SessionStore>,
    ui_dir: Option<PathBuf>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(store.clone(), ui_dir);
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    store.flush_all().map_err(std::io::Error::other)?;
    tracing::info!("session logs flushed");
    Ok(())
}
