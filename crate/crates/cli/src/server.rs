//! JSON HTTP API over an immutable loaded model.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::{header, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tower_http::cors::{Any, CorsLayer};

use crate::api::{predict, LoadedModel, PredictError, PredictRequest, PredictResponse};

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        // Syntax, type and missing-field problems all surface as 400.
        ApiError::new(StatusCode::BAD_REQUEST, r.body_text())
    }
}

impl From<PredictError> for ApiError {
    fn from(e: PredictError) -> Self {
        let status = match e {
            PredictError::Invalid { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            PredictError::NoBackground | PredictError::Model(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

type Shared = Arc<LoadedModel>;

async fn health(State(model): State<Shared>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "model_version": model.version }))
}

async fn run(model: Shared, req: PredictRequest, explain: bool) -> Result<Json<PredictResponse>, ApiError> {
    // Attribution evaluates thousands of rows; keep it off the async workers.
    let out = tokio::task::spawn_blocking(move || predict(&model, &req, explain))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("worker failed: {e}")))??;
    Ok(Json(out))
}

async fn predict_handler(
    State(model): State<Shared>,
    body: Result<Json<PredictRequest>, JsonRejection>,
) -> Result<Json<PredictResponse>, ApiError> {
    let Json(req) = body?;
    let explain = req.explain;
    run(model, req, explain).await
}

async fn explain_handler(
    State(model): State<Shared>,
    body: Result<Json<PredictRequest>, JsonRejection>,
) -> Result<Json<PredictResponse>, ApiError> {
    let Json(req) = body?;
    run(model, req, true).await
}

pub fn router(model: LoadedModel) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST, Method::OPTIONS])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/health", get(health))
        .route("/predict", post(predict_handler))
        .route("/explain", post(explain_handler))
        .layer(cors)
        .with_state(Arc::new(model))
}

pub async fn serve(model: LoadedModel, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    eprintln!("serving model {} on http://{}", model.version, listener.local_addr()?);
    axum::serve(listener, router(model))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
