//! Read-only HTTP API over a directory of analyzed sessions.
//!
//! Routes:
//! - `GET /api/sessions`
//! - `GET /api/sessions/{id}/summary`
//! - `GET /api/sessions/{id}/timeline?from=&to=`
//! - `GET /api/sessions/{id}/media` (single byte ranges)
//! - `POST /api/reload`
//!
//! Anything else falls through to the static dashboard directory, if any.

pub mod catalog;
mod media;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tower_http::services::ServeDir;

pub use catalog::{timeline_slice, Catalog, SessionEntry, SessionIndexEntry, TimelineSlice};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub struct AppState {
    config: ServiceConfig,
    catalog: RwLock<Arc<Catalog>>,
    reload_lock: tokio::sync::Mutex<()>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> std::io::Result<Arc<Self>> {
        let catalog = Catalog::scan(&config.data_dir)?;
        Ok(Arc::new(Self {
            config,
            catalog: RwLock::new(Arc::new(catalog)),
            reload_lock: tokio::sync::Mutex::new(()),
        }))
    }

    pub fn catalog(&self) -> Arc<Catalog> {
        self.catalog.read().expect("catalog lock poisoned").clone()
    }
}

pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn session(catalog: &Catalog, id: &str) -> ApiResult<SessionEntry> {
    catalog
        .sessions
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("unknown session '{id}'")))
}

async fn list_sessions(State(state): State<Arc<AppState>>) -> Json<Vec<SessionIndexEntry>> {
    Json(state.catalog().index())
}

async fn get_summary(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let entry = session(&state.catalog(), &id)?;
    let analyzed = entry
        .analyzed
        .ok_or_else(|| ApiError::not_found(format!("session '{id}' has no readable summary")))?;
    Ok(([(header::CONTENT_TYPE, "application/json")], analyzed.summary_bytes).into_response())
}

fn parse_bound(params: &HashMap<String, String>, key: &str) -> ApiResult<Option<f64>> {
    match params.get(key) {
        None => Ok(None),
        Some(raw) => match raw.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(ApiError::bad_request(format!("'{key}' must be a finite number, got '{raw}'"))),
        },
    }
}

async fn get_timeline(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Json<TimelineSlice>> {
    let entry = session(&state.catalog(), &id)?;
    let analyzed = entry
        .analyzed
        .ok_or_else(|| ApiError::not_found(format!("session '{id}' has not been analyzed")))?;
    let duration = analyzed.summary.duration;
    let from = parse_bound(&params, "from")?.unwrap_or(0.0);
    let to = parse_bound(&params, "to")?.unwrap_or(duration).min(duration);
    if from < 0.0 {
        return Err(ApiError::bad_request(format!("'from' must be non-negative, got {from}")));
    }
    if from >= to {
        return Err(ApiError::bad_request(format!("empty range: from {from} >= to {to}")));
    }
    Ok(Json(timeline_slice(&analyzed.summary, &analyzed.timeline, from, to)))
}

async fn get_media(State(state): State<Arc<AppState>>, Path(id): Path<String>, headers: HeaderMap) -> ApiResult<Response> {
    let entry = session(&state.catalog(), &id)?;
    let path = entry
        .media
        .ok_or_else(|| ApiError::not_found(format!("session '{id}' has no media file")))?;
    media::serve_file(&path, headers.get(header::RANGE)).await
}

async fn reload(State(state): State<Arc<AppState>>) -> ApiResult<Json<Vec<SessionIndexEntry>>> {
    let _guard = state.reload_lock.lock().await;
    let data = state.config.data_dir.clone();
    let catalog = tokio::task::spawn_blocking(move || Catalog::scan(&data))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("rescan failed: {e}")))?;
    let index = catalog.index();
    *state.catalog.write().expect("catalog lock poisoned") = Arc::new(catalog);
    Ok(Json(index))
}

async fn api_not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/sessions", get(list_sessions))
        .route("/sessions/{id}/summary", get(get_summary))
        .route("/sessions/{id}/timeline", get(get_timeline))
        .route("/sessions/{id}/media", get(get_media))
        .route("/reload", post(reload))
        .fallback(api_not_found);
    let app = Router::new().nest("/api", api);
    let app = match &state.config.static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.fallback(api_not_found),
    };
    app.with_state(state)
}

/// Binds `0.0.0.0:port` and serves until the process is stopped.
pub async fn serve(config: ServiceConfig, port: u16) -> std::io::Result<()> {
    let state = AppState::new(config)?;
    let listener = tokio::net::TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], port))).await?;
    axum::serve(listener, router(state)).await
}
