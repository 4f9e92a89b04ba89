//! HTTP facade over the engine.
//!
//! Lock order, when more than one is held: the session map, one session,
//! the feedback log, then the engine state.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use feedrank_core::engine::{retrain, ActiveContext};
use feedrank_core::{EngineConfig, EngineState, Error as CoreError, Session};
use serde::{Deserialize, Serialize};

use crate::error::AppError;
use crate::formats;
use crate::repository::FeedbackLog;
use crate::workspace::Workspace;

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

struct SessionEntry {
    session: Session,
    /// Models in force when the session opened; retrains only show up in
    /// later sessions.
    engine: Arc<EngineState>,
    feedback: usize,
}

pub struct Shared {
    workspace: Workspace,
    config: EngineConfig,
    log: RwLock<FeedbackLog>,
    engine: RwLock<Arc<EngineState>>,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionEntry>>>>,
    /// Serializes retraining so versions increase by one per retrain.
    retrain_lock: Mutex<()>,
    pending: AtomicU64,
    /// Where to persist models after a retrain, if anywhere.
    model_path: Option<PathBuf>,
}

#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    pub fn new(workspace: Workspace, config: EngineConfig, log: FeedbackLog, engine: EngineState, model_path: Option<PathBuf>) -> Self {
        Self(Arc::new(Shared {
            workspace,
            config,
            log: RwLock::new(log),
            engine: RwLock::new(Arc::new(engine)),
            sessions: Mutex::new(HashMap::new()),
            retrain_lock: Mutex::new(()),
            pending: AtomicU64::new(0),
            model_path,
        }))
    }

    pub fn engine(&self) -> Arc<EngineState> {
        self.0.engine.read().expect("engine lock").clone()
    }

    pub fn repository_size(&self) -> usize {
        self.0.log.read().expect("log lock").len()
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<SessionEntry>>> {
        self.0.sessions.lock().expect("sessions lock").get(id).cloned().ok_or_else(|| unknown_session(id))
    }

    pub fn pending_retrains(&self) -> u64 {
        self.0.pending.load(Ordering::SeqCst)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        log::error!("internal error: {e}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::SessionClosed(_) => Self::new(StatusCode::CONFLICT, "session_closed", e.to_string()),
            CoreError::UnknownQueryId(_) => Self::new(StatusCode::NOT_FOUND, "unknown_query", e.to_string()),
            CoreError::ApiNotInList { .. } => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "api_not_in_list", e.to_string()),
            CoreError::InvalidRecord(_) | CoreError::EmptyQueryBag | CoreError::EmptyBag => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", e.to_string())
            }
            other => Self::internal(other),
        }
    }
}

impl From<AppError> for ApiError {
    fn from(e: AppError) -> Self {
        match e {
            AppError::Core(c) => c.into(),
            other => Self::internal(other),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_body", e.body_text())
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: &'a str,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { code: self.code, message: &self.message })).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn unknown_session(id: &str) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`"))
}

#[derive(Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
    pub created: u64,
}

async fn create_session(State(app): State<AppState>) -> (StatusCode, Json<SessionCreated>) {
    let id = uuid::Uuid::new_v4().simple().to_string();
    let created = now_ms();
    let entry = SessionEntry { session: Session::new(id.clone(), created), engine: app.engine(), feedback: 0 };
    app.0.sessions.lock().expect("sessions lock").insert(id.clone(), Arc::new(Mutex::new(entry)));
    (StatusCode::CREATED, Json(SessionCreated { id, created }))
}

#[derive(Deserialize)]
pub struct QueryBody {
    pub text: String,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ItemPayload {
    pub rank: usize,
    pub api_id: String,
    pub path: String,
    pub description: String,
    pub pred_score: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct QueryPayload {
    pub query_id: String,
    pub model_version: u64,
    pub items: Vec<ItemPayload>,
}

async fn post_query(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<QueryBody>, JsonRejection>,
) -> ApiResult<Json<QueryPayload>> {
    let Json(body) = body?;
    let shared = &app.0;
    let handle = app.session(&id)?;
    let mut entry = handle.lock().expect("session lock");
    if !entry.session.is_open() {
        return Err(CoreError::SessionClosed(id).into());
    }
    if body.text.trim().is_empty() {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "empty_query", "query text is empty"));
    }
    let log = shared.log.read().expect("log lock");
    let ws = &shared.workspace;
    let entry = &mut *entry;
    let cached = entry.session.handle_query(&body.text, &ws.kb, &ws.recommender, &entry.engine, log.records(), &shared.config)?;
    let items = cached
        .result
        .items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let entry = ws.kb.entry(&item.api_id)?;
            Ok(ItemPayload {
                rank: i + 1,
                api_id: item.api_id.clone(),
                path: entry.path.clone(),
                description: entry.description.clone(),
                pred_score: item.pred_score,
            })
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    Ok(Json(QueryPayload { query_id: cached.query_id.clone(), model_version: cached.result.model_version, items }))
}

#[derive(Deserialize)]
pub struct FeedbackBody {
    pub query_id: String,
    pub api_id: String,
}

/// 204 only after the record is on disk.
async fn post_feedback(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<FeedbackBody>, JsonRejection>,
) -> ApiResult<StatusCode> {
    let Json(body) = body?;
    let shared = &app.0;
    let handle = app.session(&id)?;
    let mut entry = handle.lock().expect("session lock");
    let record = entry.session.feedback(&body.query_id, &body.api_id, now_ms())?;
    shared.log.write().expect("log lock").append(record)?;
    entry.feedback += 1;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Serialize, Deserialize, Debug)]
pub struct CloseAck {
    pub session_id: String,
    pub retrain_scheduled: bool,
    pub model_version: u64,
    /// Version the engine will have once the scheduled retrain succeeds.
    pub expected_model_version: u64,
}

async fn close_session(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<(StatusCode, Json<CloseAck>)> {
    let shared = &app.0;
    let (queries, feedback) = {
        let handle = app.session(&id)?;
        let mut entry = handle.lock().expect("session lock");
        (entry.session.close()?, entry.feedback)
    };
    let version = app.engine().model_version;
    let scheduled = feedback > 0;
    let pending_before = if scheduled { shared.pending.fetch_add(1, Ordering::SeqCst) } else { 0 };
    if scheduled {
        let app = app.clone();
        let session_id = id.clone();
        tokio::task::spawn_blocking(move || {
            run_retrain(&app, &session_id, &queries);
            app.0.pending.fetch_sub(1, Ordering::SeqCst);
        });
    }
    let expected = if scheduled { version + pending_before + 1 } else { version };
    Ok((
        StatusCode::ACCEPTED,
        Json(CloseAck { session_id: id, retrain_scheduled: scheduled, model_version: version, expected_model_version: expected }),
    ))
}

fn run_retrain(app: &AppState, session_id: &str, queries: &[feedrank_core::Query]) {
    let shared = &app.0;
    let _guard = shared.retrain_lock.lock().expect("retrain lock");
    let records = shared.log.read().expect("log lock").records().to_vec();
    let current = app.engine();
    let ws = &shared.workspace;
    let active = ws.oracle.as_ref().map(|oracle| ActiveContext {
        oracle,
        session_queries: queries,
        session_id,
        timestamp_ms: now_ms(),
    });
    let outcome = match retrain(&current, &records, &ws.kb, &ws.recommender, &shared.config, active) {
        Ok(o) => o,
        Err(e) => {
            log::error!("retrain after session {session_id} failed: {e}");
            return;
        }
    };
    if !outcome.retrained {
        return;
    }
    {
        let mut log = shared.log.write().expect("log lock");
        for r in outcome.oracle_records {
            if let Err(e) = log.append(r) {
                log::error!("could not store oracle feedback: {e}");
            }
        }
    }
    if let Some(path) = &shared.model_path {
        if let Err(e) = formats::write_model(path, &outcome.state) {
            log::error!("could not persist models: {e}");
        }
    }
    log::info!("session {session_id} closed; models now at version {}", outcome.state.model_version);
    *shared.engine.write().expect("engine lock") = Arc::new(outcome.state);
}

#[derive(Serialize, Deserialize, Debug)]
pub struct Stats {
    pub repository_size: usize,
    pub model_version: u64,
    pub sessions_open: usize,
    pub sessions_closed: usize,
    pub retrains_pending: u64,
}

async fn stats(State(app): State<AppState>) -> Json<Stats> {
    let (open, closed) = {
        let sessions = app.0.sessions.lock().expect("sessions lock");
        let open = sessions.values().filter(|e| e.lock().expect("session lock").session.is_open()).count();
        (open, sessions.len() - open)
    };
    Json(Stats {
        repository_size: app.repository_size(),
        model_version: app.engine().model_version,
        sessions_open: open,
        sessions_closed: closed,
        retrains_pending: app.pending_retrains(),
    })
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

pub fn router(app: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/v1/health", get(health))
        .route("/v1/stats", get(stats))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", delete(close_session))
        .route("/v1/sessions/{id}/queries", post(post_query))
        .route("/v1/sessions/{id}/feedback", post(post_feedback))
        .with_state(app);
    match ui_dir {
        Some(dir) => api.nest_service("/ui", tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}
