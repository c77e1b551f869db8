//! HTTP/JSON API over [`SessionManager`].

use std::path::Path;
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::session::{ServiceError, SessionManager};

pub const DEFAULT_PAGE: usize = 10;
pub const MAX_PAGE: usize = 1000;

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self {
            ServiceError::EmptyQuery | ServiceError::Validation(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Engine(_) | ServiceError::Journal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = ErrorBody { code: self.code().to_string(), message: self.to_string() };
        (status, Json(body)).into_response()
    }
}

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    pub query: String,
}

#[derive(Debug, Deserialize)]
pub struct FeedbackRequest {
    #[serde(default)]
    pub selected: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct PageParams {
    pub offset: Option<usize>,
    pub limit: Option<usize>,
}

type Shared = Arc<SessionManager>;

/// Runs engine work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ServiceError>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f).await.expect("session task panicked")
}

async fn create(State(m): State<Shared>, Json(req): Json<CreateRequest>) -> Result<impl IntoResponse, ServiceError> {
    let view = blocking(move || m.create_session(&req.query)).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn feedback(
    State(m): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<FeedbackRequest>,
) -> Result<impl IntoResponse, ServiceError> {
    let view = blocking(move || m.submit_feedback(&id, req.selected)).await?;
    Ok(Json(view))
}

async fn results(
    State(m): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Query(page): Query<PageParams>,
) -> Result<impl IntoResponse, ServiceError> {
    let offset = page.offset.unwrap_or(0);
    let limit = page.limit.unwrap_or(DEFAULT_PAGE).min(MAX_PAGE);
    let page = blocking(move || m.get_results(&id, offset, limit)).await?;
    Ok(Json(page))
}

async fn session(State(m): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(m.get_session(&id)?))
}

pub fn router(manager: Shared, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/sessions", post(create))
        .route("/api/sessions/{id}", get(session))
        .route("/api/sessions/{id}/feedback", post(feedback))
        .route("/api/sessions/{id}/results", get(results))
        .with_state(manager);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
