use std::io;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use woz_core::analysis::analyze_events;
use woz_core::logstore::LogError;
use woz_core::repository::RepositoryError;
use woz_core::session::SessionError;
use woz_core::{
    ErrorRepository, ErrorWeights, LogAnalysis, PredictionKind, Session, SessionConfig, SessionMode, SessionSummary,
};

use crate::push;
use crate::state::{with_session, SessionHandle, SharedState};

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/repositories", post(upload_repository))
        .route("/repositories/{name}", get(get_repository))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/ground-truth", post(select_ground_truth))
        .route("/sessions/{id}/confidence", post(set_confidence))
        .route("/sessions/{id}/prediction", post(record_prediction))
        .route("/sessions/{id}/end", post(end_session))
        .route("/sessions/{id}/log.csv", get(download_log))
        .route("/sessions/{id}/analysis", get(analysis))
        .route("/sessions/{id}/analysis/distribution.csv", get(distribution_csv))
        .route("/sessions/{id}/ws", get(push::console_socket))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: &'a str,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} `{id}`"))
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_payload", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.code,
            message: &self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        match e {
            SessionError::SessionNotRunning
            | SessionError::NoGroundTruthSelected
            | SessionError::KindNotScheduled { .. }
            | SessionError::BudgetExhausted(_) => Self::new(StatusCode::CONFLICT, "conflict", message),
            SessionError::Log(e) => e.into(),
            _ => Self::invalid(message),
        }
    }
}

impl From<LogError> for ApiError {
    fn from(e: LogError) -> Self {
        match e {
            LogError::UnknownSession(id) => Self::not_found("session", &id),
            LogError::StorageFailure(io) if io.kind() == io::ErrorKind::AlreadyExists => Self::new(
                StatusCode::CONFLICT,
                "conflict",
                "a log for this session id already exists",
            ),
            other => {
                tracing::error!(error = %other, "log storage failure");
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_failure", other.to_string())
            }
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid(format!("invalid JSON body: {e}")))
}

fn session_handle(state: &SharedState, id: &str) -> ApiResult<Arc<SessionHandle>> {
    state.session(id).ok_or_else(|| ApiError::not_found("session", id))
}

#[derive(Deserialize)]
struct RepositoryQuery {
    name: String,
}

#[derive(Serialize)]
struct RepositoryReport {
    name: String,
    entries: usize,
    ground_truths: Vec<String>,
}

fn valid_repository_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.')
        && !name.starts_with('.')
}

async fn upload_repository(
    State(state): State<SharedState>,
    Query(q): Query<RepositoryQuery>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<RepositoryReport>)> {
    if !valid_repository_name(&q.name) {
        return Err(ApiError::invalid(format!(
            "repository name `{}` must be non-empty and use only letters, digits, `-`, `_` or `.`",
            q.name
        )));
    }
    let repo =
        ErrorRepository::parse(q.name.clone(), &body).map_err(|e: RepositoryError| ApiError::invalid(e.to_string()))?;
    let path = state.config.repository_dir().join(format!("{}.csv", q.name));
    std::fs::write(&path, repo.to_csv()).map_err(|e| {
        tracing::error!(path = %path.display(), error = %e, "cannot persist repository");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_failure", e.to_string())
    })?;
    let report = RepositoryReport {
        name: q.name.clone(),
        entries: repo.entries().len(),
        ground_truths: repo.ground_truths().into_iter().map(String::from).collect(),
    };
    state.repositories.write().expect("lock").insert(q.name, Arc::new(repo));
    Ok((StatusCode::CREATED, Json(report)))
}

async fn get_repository(State(state): State<SharedState>, Path(name): Path<String>) -> ApiResult<Response> {
    let repo = state
        .repository(&name)
        .ok_or_else(|| ApiError::not_found("repository", &name))?;
    Ok(Json(repo.as_ref()).into_response())
}

/// `SessionConfig` with service-side defaults for the optional fields.
#[derive(Deserialize)]
struct CreateSession {
    session_id: Option<String>,
    repository_name: String,
    target_accuracy: f64,
    mode: Option<SessionMode>,
    planned_trials: Option<u32>,
    rng_seed: Option<u64>,
    expose_correctness_to_prototype: Option<bool>,
    weights: Option<ErrorWeights>,
}

#[derive(Serialize)]
struct Created {
    session_id: String,
    config: SessionConfig,
}

fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

async fn create_session(State(state): State<SharedState>, body: Bytes) -> ApiResult<(StatusCode, Json<Created>)> {
    let req: CreateSession = parse_body(&body)?;
    let session_id = req.session_id.unwrap_or_else(|| uuid::Uuid::new_v4().to_string());
    if !valid_session_id(&session_id) {
        return Err(ApiError::invalid(format!(
            "session id `{session_id}` must be 1-128 letters, digits, `-` or `_`"
        )));
    }
    let mode = req.mode.unwrap_or(state.config.default_mode);
    let rng_seed = match (mode, req.rng_seed) {
        (SessionMode::Auto, None) => Some(rand::random::<u64>()),
        (_, seed) => seed,
    };
    let config = SessionConfig {
        session_id: session_id.clone(),
        repository_name: req.repository_name,
        target_accuracy: req.target_accuracy,
        mode,
        planned_trials: req.planned_trials,
        rng_seed,
        expose_correctness_to_prototype: req.expose_correctness_to_prototype.unwrap_or(true),
        weights: req.weights.unwrap_or(state.config.default_weights),
    };
    let repo = state
        .repository(&config.repository_name)
        .ok_or_else(|| ApiError::invalid(format!("unknown repository `{}`", config.repository_name)))?;
    if state.session(&session_id).is_some() {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "conflict",
            format!("session `{session_id}` already exists"),
        ));
    }
    let log = state.logs.create(&session_id)?;
    let session = match Session::create(config.clone(), repo, log, state.clock.clone()) {
        Ok(s) => s,
        Err(e) => {
            // Nothing was recorded yet; free the id for a corrected retry.
            let _ = std::fs::remove_file(woz_core::logstore::log_path(state.logs.dir(), &session_id));
            return Err(e.into());
        }
    };
    state.insert_session(session).ok_or_else(|| {
        ApiError::new(
            StatusCode::CONFLICT,
            "conflict",
            format!("session `{session_id}` already exists"),
        )
    })?;
    tracing::info!(session = %session_id, mode = %mode, target = config.target_accuracy, "session started");
    Ok((StatusCode::CREATED, Json(Created { session_id, config })))
}

async fn get_session(State(state): State<SharedState>, Path(id): Path<String>) -> ApiResult<Response> {
    let handle = session_handle(&state, &id)?;
    let session = handle.lock().await;
    Ok(Json(session.snapshot()).into_response())
}

#[derive(Deserialize)]
struct GroundTruthRequest {
    label: String,
}

#[derive(Deserialize)]
struct ConfidenceRequest {
    value: i64,
}

#[derive(Deserialize, Default)]
struct PredictionRequest {
    kind: Option<PredictionKind>,
}

async fn select_ground_truth(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let handle = session_handle(&state, &id)?;
    let req: GroundTruthRequest = parse_body(&body)?;
    let snapshot = with_session(&handle, |s| {
        s.select_ground_truth(&req.label)?;
        Ok(s.snapshot())
    })
    .await?;
    Ok(Json(snapshot).into_response())
}

async fn set_confidence(State(state): State<SharedState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let handle = session_handle(&state, &id)?;
    let req: ConfidenceRequest = parse_body(&body)?;
    let snapshot = with_session(&handle, |s| {
        s.set_confidence(req.value)?;
        Ok(s.snapshot())
    })
    .await?;
    Ok(Json(snapshot).into_response())
}

/// In auto mode the kind may be omitted and the scheduled one is used.
async fn record_prediction(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let handle = session_handle(&state, &id)?;
    let req: PredictionRequest = if body.iter().all(u8::is_ascii_whitespace) {
        PredictionRequest::default()
    } else {
        parse_body(&body)?
    };
    let mut session = handle.lock().await;
    let kind = match req.kind.or_else(|| session.scheduled_kind()) {
        Some(kind) => kind,
        None if session.config().mode == SessionMode::Auto => {
            return Err(SessionError::BudgetExhausted(session.config().planned_trials.unwrap_or(0)).into())
        }
        None => return Err(ApiError::invalid("missing `kind`")),
    };
    let event = session.record_prediction(kind)?;
    let expose = session.config().expose_correctness_to_prototype;
    let delivered = state.broadcast_prediction(&handle, &event, expose);
    drop(session);
    tracing::debug!(session = %id, seq = event.seq, kind = %event.kind, delivered, "prediction recorded");
    Ok(Json(event).into_response())
}

async fn end_session(State(state): State<SharedState>, Path(id): Path<String>) -> ApiResult<Json<SessionSummary>> {
    let handle = session_handle(&state, &id)?;
    let mut session = handle.lock().await;
    let summary = session.end()?;
    state.broadcast_end(&handle, &summary);
    drop(session);
    tracing::info!(session = %id, accuracy = summary.final_accuracy, "session ended");
    Ok(Json(summary))
}

fn csv_response(bytes: Vec<u8>, filename: &str) -> Response {
    (
        [
            (header::CONTENT_TYPE, "text/csv; charset=utf-8".to_string()),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"{filename}\""),
            ),
        ],
        bytes,
    )
        .into_response()
}

/// Live sessions are served from memory; sessions from earlier runs fall back
/// to the log file on disk.
async fn download_log(State(state): State<SharedState>, Path(id): Path<String>) -> ApiResult<Response> {
    let bytes = match state.session(&id) {
        Some(handle) => handle.lock().await.log().export_csv(),
        None => {
            if !valid_session_id(&id) {
                return Err(ApiError::not_found("session", &id));
            }
            state.logs.export_csv(&id)?
        }
    };
    Ok(csv_response(bytes, &format!("{id}.csv")))
}

async fn session_analysis(state: &SharedState, id: &str) -> ApiResult<LogAnalysis> {
    let handle = session_handle(state, id)?;
    let session = handle.lock().await;
    let labels = session.repository().ground_truths();
    Ok(analyze_events(session.summary(), session.events(), &labels))
}

async fn analysis(State(state): State<SharedState>, Path(id): Path<String>) -> ApiResult<Json<LogAnalysis>> {
    session_analysis(&state, &id).await.map(Json)
}

async fn distribution_csv(State(state): State<SharedState>, Path(id): Path<String>) -> ApiResult<Response> {
    let analysis = session_analysis(&state, &id).await?;
    Ok(csv_response(
        analysis.distribution.to_csv(),
        &format!("{id}-distribution.csv"),
    ))
}
