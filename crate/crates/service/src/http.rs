//! JSON-over-HTTP front end for [`Registry`].

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bwsrank_core::formats;
use bwsrank_core::Item;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::ServiceError;
use crate::store::{ProjectSettings, Registration, Registry, VoteSubmission};

type Shared = Arc<Registry>;

/// Error body sent for every failed request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let body = ErrorBody {
            code: self.0.code().to_string(),
            message: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body)
        .map_err(|e| ServiceError::InvalidInput(format!("request body: {e}")).into())
}

/// Runs a registry call off the async workers; votes are synced to disk.
async fn blocking<T, F>(registry: &Shared, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Registry) -> crate::Result<T> + Send + 'static,
{
    let registry = registry.clone();
    tokio::task::spawn_blocking(move || f(&registry))
        .await
        .map_err(|e| ApiError(ServiceError::Internal(e.to_string())))?
        .map_err(ApiError)
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CreateProjectRequest {
    /// Items as TSV text (`id`, `text`, `definition`, optional `reference_label`).
    #[serde(default)]
    pub items_tsv: Option<String>,
    #[serde(default)]
    pub items: Option<Vec<Item>>,
    #[serde(flatten)]
    pub settings: ProjectSettings,
}

#[derive(Debug, Deserialize)]
struct AnnotatorQuery {
    annotator: Option<String>,
}

#[derive(Debug, Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

async fn create_project(State(reg): State<Shared>, body: Bytes) -> ApiResult<Response> {
    let req: CreateProjectRequest = parse(&body)?;
    let items = match (req.items_tsv, req.items) {
        (Some(tsv), None) => formats::parse_items_tsv(&tsv).map_err(ServiceError::from)?,
        (None, Some(items)) => items,
        _ => {
            return Err(
                ServiceError::InvalidInput("give exactly one of items_tsv or items".into()).into(),
            )
        }
    };
    let settings = req.settings;
    let (summary, created) = blocking(&reg, move |r| r.create_project(items, settings)).await?;
    let status = if created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((status, Json(summary)).into_response())
}

async fn get_project(State(reg): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(reg.summary(&id)?).into_response())
}

async fn register(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let registration: Registration = if body.is_empty() {
        Registration::default()
    } else {
        parse(&body)?
    };
    let annotator = blocking(&reg, move |r| r.register_annotator(&id, registration)).await?;
    Ok((StatusCode::CREATED, Json(annotator)).into_response())
}

async fn next_task(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<AnnotatorQuery>,
) -> ApiResult<Response> {
    let annotator = q
        .annotator
        .ok_or_else(|| ServiceError::InvalidInput("missing ?annotator=".into()))?;
    Ok(Json(reg.next_task(&id, &annotator)?).into_response())
}

async fn submit(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let submission: VoteSubmission = parse(&body)?;
    let receipt = blocking(&reg, move |r| r.submit_vote(&id, submission)).await?;
    Ok((StatusCode::CREATED, Json(receipt)).into_response())
}

async fn progress(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<AnnotatorQuery>,
) -> ApiResult<Response> {
    Ok(Json(reg.progress(&id, q.annotator.as_deref())?).into_response())
}

async fn export_votes(State(reg): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let csv = reg.export_votes(&id)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

async fn scale(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    let scale = reg.scale(&id)?;
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(scale).into_response()),
        Some("csv") => {
            let mut out = Vec::new();
            formats::write_scale_csv(&scale, &mut out).map_err(ServiceError::from)?;
            Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], out).into_response())
        }
        Some(other) => Err(ServiceError::InvalidInput(format!("unknown format {other:?}")).into()),
    }
}

async fn not_found() -> ApiError {
    ApiError(ServiceError::NotFound("route".into()))
}

/// Builds the API. When `static_dir` is given, other paths are served from it.
pub fn router(registry: Arc<Registry>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/projects", post(create_project))
        .route("/projects/{id}", get(get_project))
        .route("/projects/{id}/annotators", post(register))
        .route("/projects/{id}/tasks/next", get(next_task))
        .route("/projects/{id}/votes", post(submit))
        .route("/projects/{id}/progress", get(progress))
        .route("/projects/{id}/export/votes", get(export_votes))
        .route("/projects/{id}/scale", get(scale))
        .with_state(registry);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}

/// Serves until the listener fails.
pub async fn serve(
    registry: Arc<Registry>,
    addr: SocketAddr,
    static_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(registry, static_dir)).await
}
