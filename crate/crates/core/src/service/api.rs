use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use super::store::{AnnotationRecord, ReviewStore, StoreError};

/// Bearer token required by every endpoint except `/v1/health` when set.
pub const API_TOKEN_VAR: &str = "SIMULCORPUS_API_TOKEN";

#[derive(Clone)]
pub struct ApiState {
    pub store: Arc<RwLock<ReviewStore>>,
    pub token: Option<String>,
}

impl ApiState {
    pub fn new(store: ReviewStore, token: Option<String>) -> Self {
        ApiState {
            store: Arc::new(RwLock::new(store)),
            token,
        }
    }
}

struct ApiError(StatusCode, Value);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        match e {
            StoreError::UnknownDialogue(_) | StoreError::UnknownTriple { .. } => {
                ApiError(StatusCode::NOT_FOUND, json!({ "error": message }))
            }
            StoreError::Invalid(constraint) => ApiError(
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": message, "constraint": constraint }),
            ),
            StoreError::Conflict { latest } => ApiError(
                StatusCode::CONFLICT,
                json!({ "error": message, "version": latest }),
            ),
            StoreError::Io(_) | StoreError::Data(_) => ApiError(
                StatusCode::INTERNAL_SERVER_ERROR,
                json!({ "error": message }),
            ),
        }
    }
}

#[derive(Deserialize)]
struct PageQuery {
    page: Option<usize>,
    per_page: Option<usize>,
}

#[derive(Deserialize)]
struct ExportQuery {
    set: Option<String>,
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn list_dialogues(State(state): State<ApiState>, Query(q): Query<PageQuery>) -> Json<Value> {
    let store = state.store.read().expect("store lock");
    let page = q.page.unwrap_or(1).max(1);
    let per_page = q.per_page.unwrap_or(50).clamp(1, 500);
    let items: Vec<_> = store
        .dialogues()
        .skip((page - 1) * per_page)
        .take(per_page)
        .map(|d| d.summary())
        .collect();
    Json(json!({
        "items": items,
        "page": page,
        "per_page": per_page,
        "total": store.len(),
    }))
}

async fn get_dialogue(
    State(state): State<ApiState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let store = state.store.read().expect("store lock");
    let record = store.dialogue(&id).ok_or(StoreError::UnknownDialogue(id))?;
    Ok(Json(json!({
        "id": record.dialogue.id,
        "source_units": record.dialogue.source_units,
        "translation_units": record.dialogue.translation_units,
        "transcript_utterances": record.dialogue.transcript_utterances,
        "triples": record.triples,
        "status": record.status(),
        "version": record.version,
    })))
}

async fn post_annotation(
    State(state): State<ApiState>,
    Path(id): Path<String>,
    Json(mut record): Json<AnnotationRecord>,
) -> Result<Json<Value>, ApiError> {
    if !record.dialogue_id.is_empty() && record.dialogue_id != id {
        return Err(ApiError(
            StatusCode::UNPROCESSABLE_ENTITY,
            json!({ "error": "dialogue_id does not match the path", "constraint": "dialogue_id" }),
        ));
    }
    record.dialogue_id = id;
    let mut store = state.store.write().expect("store lock");
    let updated = store.apply(record)?;
    Ok(Json(json!({
        "id": updated.dialogue.id,
        "version": updated.version,
        "triples": updated.triples,
    })))
}

async fn export(State(state): State<ApiState>, Query(q): Query<ExportQuery>) -> Json<Value> {
    let store = state.store.read().expect("store lock");
    let set = q.set.unwrap_or_else(|| "test".to_string());
    Json(serde_json::to_value(store.export(&set)).expect("export serializes"))
}

async fn require_token(State(state): State<ApiState>, request: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let ok = request
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|v| v == token);
        if !ok {
            return ApiError(
                StatusCode::UNAUTHORIZED,
                json!({ "error": "missing or bad token" }),
            )
            .into_response();
        }
    }
    next.run(request).await
}

/// All endpoints, under `/v1`.
pub fn router(state: ApiState) -> Router {
    let protected = Router::new()
        .route("/dialogues", get(list_dialogues))
        .route("/dialogues/:id", get(get_dialogue))
        .route("/dialogues/:id/annotations", post(post_annotation))
        .route("/export", get(export))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    let v1 = Router::new().route("/health", get(health)).merge(protected);
    Router::new().nest("/v1", v1).with_state(state)
}

pub async fn serve(state: ApiState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("review api listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
