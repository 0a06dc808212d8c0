//! HTTP routes.

use asg_core::asg::MODEL_SCHEMA_VERSION;
use asg_core::{Error, TaskKind, TaskParam};
use axum::extract::{Path, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::models::ModelInfo;
use crate::session::{is_satisfied_phrase, step, HistoryEntry, Session, Status};
use crate::store::Event;
use crate::AppState;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    token: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), token: None }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} `{id}`"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownWord(ref w) => ApiError {
                token: Some(w.clone()),
                ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "unknown_word", e.to_string())
            },
            Error::ConflictingClause(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "conflicting_clause", e.to_string()),
            other => Self::internal(other),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let Some(t) = self.token {
            body["token"] = json!(t);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub task: TaskKind,
    pub model_id: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub request_id: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FeedbackRequest {
    #[serde(default)]
    pub phrase: Option<String>,
    #[serde(default)]
    pub satisfied: bool,
    #[serde(default)]
    pub request_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub session_id: String,
    pub status: Status,
    /// Index of the episode shown, 0 for the initial rollout.
    pub episode: usize,
    pub phrase: Option<String>,
    pub embedding: Option<Vec<f64>>,
    pub delta: Option<Vec<f64>>,
    pub tau: Vec<f64>,
    pub trajectory: crate::session::TrajectoryView,
}

impl FeedbackResponse {
    fn from_entry(s: &Session, e: &HistoryEntry) -> Self {
        FeedbackResponse {
            session_id: s.id.clone(),
            status: s.status,
            episode: e.episode,
            phrase: e.phrase.clone(),
            embedding: e.embedding.as_ref().map(|l| l.0.clone()),
            delta: e.delta.clone(),
            tau: e.tau.clone(),
            trajectory: e.trajectory.clone(),
        }
    }
}

pub fn router(state: AppState) -> Router {
    let mut app = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/models", get(list_models))
        .route("/healthz", get(healthz));
    if let Some(origin) = &state.config.cors_origin {
        let allow = if origin == "*" {
            AllowOrigin::any()
        } else {
            match HeaderValue::from_str(origin) {
                Ok(v) => AllowOrigin::exact(v),
                Err(_) => {
                    log::warn!("ignoring invalid CORS origin {origin:?}");
                    return app.with_state(state);
                }
            }
        };
        app = app.layer(
            CorsLayer::new()
                .allow_origin(allow)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([axum::http::header::CONTENT_TYPE]),
        );
    }
    app.with_state(state)
}

/// Marks `s` expired when idle too long; persists the change.
fn refresh(state: &AppState, s: &mut Session) {
    if s.status == Status::Active && state.now().saturating_sub(s.updated_ms) > state.config.idle_timeout_ms {
        s.status = Status::Expired;
        let ev = Event::Status { status: Status::Expired, at_ms: state.now(), request_id: None };
        if let Err(e) = state.store.append(&s.id, &ev) {
            log::warn!("session {}: {e}", s.id);
        }
    }
}

async fn active_sessions(state: &AppState) -> usize {
    let mut n = 0;
    for h in state.store.handles() {
        let mut s = h.lock().await;
        refresh(state, &mut s);
        n += (s.status == Status::Active) as usize;
    }
    n
}

async fn create_session(State(state): State<AppState>, Json(req): Json<CreateSession>) -> ApiResult<Response> {
    let _guard = state.create_lock.lock().await;
    if let Some(h) = req.request_id.as_deref().and_then(|r| state.store.by_request(r)) {
        let s = h.lock().await;
        return Ok((StatusCode::CREATED, Json(s.clone())).into_response());
    }
    let m = state.registry.get(&req.model_id).ok_or_else(|| ApiError::not_found("model", &req.model_id))?;
    if m.task.kind() != req.task {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "task_mismatch",
            format!("model `{}` grounds {}, not {}", m.id, m.task.kind(), req.task),
        ));
    }
    if active_sessions(&state).await >= state.config.max_sessions {
        return Err(ApiError::new(
            StatusCode::TOO_MANY_REQUESTS,
            "session_limit",
            format!("at most {} active sessions", state.config.max_sessions),
        ));
    }
    let seed = req.seed.unwrap_or_else(rand::random);
    let tau0 = m.task.space().sample(&mut ChaCha8Rng::seed_from_u64(seed));
    let traj = m.task.execute(&tau0)?;
    let now = state.now();
    let id = uuid::Uuid::new_v4().simple().to_string();
    let entry = HistoryEntry {
        episode: 0,
        tau: tau0.0,
        trajectory: (&traj).into(),
        phrase: None,
        embedding: None,
        delta: None,
        request_id: None,
        at_ms: now,
    };
    let events = [
        Event::Created {
            id: id.clone(),
            task: req.task,
            model_id: m.id.clone(),
            seed,
            created_ms: now,
            request_id: req.request_id.clone(),
        },
        Event::Entry(entry),
    ];
    let mut session = None;
    for e in events.iter().cloned() {
        e.apply(&mut session);
    }
    let session = session.expect("created");
    state.store.create(session.clone(), &events).map_err(ApiError::internal)?;
    Ok((StatusCode::CREATED, Json(session)).into_response())
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Session>> {
    let h = state.store.get(&id).ok_or_else(|| ApiError::not_found("session", &id))?;
    let mut s = h.lock().await;
    refresh(&state, &mut s);
    Ok(Json(s.clone()))
}

async fn feedback(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<FeedbackRequest>,
) -> ApiResult<Json<FeedbackResponse>> {
    let h = state.store.get(&id).ok_or_else(|| ApiError::not_found("session", &id))?;
    let mut s = h.lock().await;
    if let Some(r) = req.request_id.as_deref() {
        if let Some(e) = s.entry_for_request(r) {
            return Ok(Json(FeedbackResponse::from_entry(&s, e)));
        }
        if s.satisfied_request.as_deref() == Some(r) {
            let last = s.history.last().expect("non-empty");
            return Ok(Json(FeedbackResponse::from_entry(&s, last)));
        }
    }
    refresh(&state, &mut s);
    if s.status != Status::Active {
        return Err(ApiError::new(StatusCode::CONFLICT, "session_closed", format!("session is {:?}", s.status).to_lowercase()));
    }
    let m = state
        .registry
        .get(&s.model_id)
        .ok_or_else(|| ApiError::internal(format!("model `{}` is no longer loaded", s.model_id)))?;
    let now = state.now();
    if req.satisfied || req.phrase.as_deref().is_some_and(is_satisfied_phrase) {
        let ev = Event::Status { status: Status::Satisfied, at_ms: now, request_id: req.request_id.clone() };
        state.store.append(&s.id, &ev).map_err(ApiError::internal)?;
        s.status = Status::Satisfied;
        s.updated_ms = now;
        s.satisfied_request = req.request_id.clone();
        let last = s.history.last().expect("non-empty");
        return Ok(Json(FeedbackResponse::from_entry(&s, last)));
    }
    let Some(phrase) = req.phrase.as_deref() else {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "missing_phrase", "send `phrase` or `satisfied`"));
    };
    let tau = TaskParam(s.tau().to_vec());
    let next = step(m.task.as_ref(), &m.model, &tau, phrase)?;
    let traj = m.task.execute(&next.tau)?;
    let entry = HistoryEntry {
        episode: s.history.len(),
        tau: next.tau.0,
        trajectory: (&traj).into(),
        phrase: Some(phrase.to_string()),
        embedding: Some(next.embedding),
        delta: Some(next.delta),
        request_id: req.request_id.clone(),
        at_ms: now,
    };
    let ev = Event::Entry(entry.clone());
    state.store.append(&s.id, &ev).map_err(ApiError::internal)?;
    s.updated_ms = now;
    s.history.push(entry);
    let last = s.history.last().expect("non-empty");
    Ok(Json(FeedbackResponse::from_entry(&s, last)))
}

#[derive(Serialize)]
struct ModelList {
    models: Vec<ModelInfo>,
}

async fn list_models(State(state): State<AppState>) -> Json<ModelList> {
    Json(ModelList { models: state.registry.iter().map(|m| m.info()).collect() })
}

async fn healthz(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "schema_version": MODEL_SCHEMA_VERSION,
        "models": state.registry.iter().map(|m| json!({ "id": m.id, "sha256": m.sha256 })).collect::<Vec<_>>(),
        "sessions": state.store.handles().len(),
    }))
}
