//! HTTP collection service for Direct Assessment HITs.
//!
//! Workers open a session, receive one item at a time and post a 0..=100
//! rating for it. The worker-facing JSON never reveals whether an item is a
//! system output, a quality-control item or a repeat. Operators poll
//! `/api/admin/status` and download the store from `/api/admin/export`.

pub mod collector;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

pub use collector::{
    AbandonedSession, Clock, CollectError, Collector, CollectorConfig, ManualClock, SessionState, SessionView,
    StatusSnapshot, SystemClock,
};

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code: "bad_request",
            message: message.into(),
        }
    }
}

impl From<CollectError> for ApiError {
    fn from(e: CollectError) -> Self {
        let status = match &e {
            CollectError::EmptyWorker => StatusCode::BAD_REQUEST,
            CollectError::UnknownSession(_) | CollectError::UnknownItem(_) => StatusCode::NOT_FOUND,
            CollectError::SessionExpired(_) => StatusCode::GONE,
            CollectError::ScoreOutOfRange(_) => StatusCode::UNPROCESSABLE_ENTITY,
            CollectError::CollectionComplete
            | CollectError::SessionComplete(_)
            | CollectError::NotCurrent { .. }
            | CollectError::AlreadyRated { .. } => StatusCode::CONFLICT,
            CollectError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            log::error!("{e}");
        }
        Self {
            status,
            code: e.code(),
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StartRequest {
    pub worker_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RatingRequest {
    pub item_id: String,
    pub score: i64,
}

fn parse<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

/// Runs a blocking collector call off the async workers.
async fn blocking<T, F>(collector: &Arc<Collector>, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&Collector) -> Result<T, CollectError> + Send + 'static,
{
    let c = collector.clone();
    tokio::task::spawn_blocking(move || f(&c))
        .await
        .map_err(|e| ApiError::from(CollectError::Storage(e.to_string())))?
        .map_err(ApiError::from)
}

async fn start_session(State(c): State<Arc<Collector>>, body: Bytes) -> Result<Json<SessionView>, ApiError> {
    let req: StartRequest = parse(&body)?;
    blocking(&c, move |c| c.start_session(&req.worker_id)).await.map(Json)
}

async fn next_item(State(c): State<Arc<Collector>>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    blocking(&c, move |c| c.next(&id)).await.map(Json)
}

async fn rate(
    State(c): State<Arc<Collector>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionView>, ApiError> {
    let req: RatingRequest = parse(&body)?;
    blocking(&c, move |c| c.submit(&id, &req.item_id, req.score))
        .await
        .map(Json)
}

async fn status(State(c): State<Arc<Collector>>) -> Json<StatusSnapshot> {
    Json(c.status().as_ref().clone())
}

async fn export(State(c): State<Arc<Collector>>) -> Result<Response, ApiError> {
    let text = blocking(&c, |c| c.export()).await?;
    Ok((
        [(header::CONTENT_TYPE, "text/tab-separated-values; charset=utf-8")],
        text,
    )
        .into_response())
}

pub fn router(collector: Arc<Collector>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/session", post(start_session))
        .route("/api/session/{id}/next", get(next_item))
        .route("/api/session/{id}/rating", post(rate))
        .route("/api/admin/status", get(status))
        .route("/api/admin/export", get(export))
        .with_state(collector);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, collector: Arc<Collector>, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(collector, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
