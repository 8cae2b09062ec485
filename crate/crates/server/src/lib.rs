//! JSON-over-HTTP session service.
//!
//! ```text
//! GET    /model
//! POST   /sessions                 -> {"id": ...}
//! GET    /sessions/{id}            -> state
//! POST   /sessions/{id}/assign     {"variable": "...", "value": "..."} -> state
//! POST   /sessions/{id}/undo       -> state
//! DELETE /sessions/{id}
//! ```
//!
//! Every state response is self-contained: assignments, every value of every
//! domain with its validity, the solution count as a decimal string, the
//! completion flag and forced bindings.

mod registry;
mod wire;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tower_http::cors::CorsLayer;

use vdconf_core::{CompiledSpace, Session, SessionError};

pub use registry::SessionRegistry;
pub use wire::{AssignRequest, ErrorBody, ModelView, StateView};

#[derive(Debug, Clone, Copy)]
pub struct ServerConfig {
    /// Idle time after which a session is dropped.
    pub session_ttl: Duration,
    /// How often idle sessions are swept.
    pub sweep_interval: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            session_ttl: Duration::from_secs(30 * 60),
            sweep_interval: Duration::from_secs(60),
        }
    }
}

pub struct AppState {
    pub space: Arc<CompiledSpace>,
    pub registry: SessionRegistry,
}

impl AppState {
    pub fn new(space: Arc<CompiledSpace>, config: ServerConfig) -> Arc<Self> {
        Arc::new(AppState {
            space,
            registry: SessionRegistry::new(config.session_ttl),
        })
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: error.to_string(),
                message: message.into(),
            },
        }
    }

    fn unknown_session(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_session",
            format!("no session `{id}`"),
        )
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        use vdconf_core::model::ModelError;
        let message = e.to_string();
        match e {
            SessionError::Unsatisfiable => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "model_unsatisfiable",
                message,
            ),
            SessionError::AlreadyAssigned(_) => {
                Self::new(StatusCode::CONFLICT, "already_assigned", message)
            }
            SessionError::NotInDomain { .. } => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "value_not_in_domain",
                message,
            ),
            SessionError::NothingToUndo => {
                Self::new(StatusCode::CONFLICT, "nothing_to_undo", message)
            }
            SessionError::Model(ModelError::UnknownVariable(_)) => {
                Self::new(StatusCode::BAD_REQUEST, "unknown_variable", message)
            }
            SessionError::Model(ModelError::UnknownValue { .. }) => {
                Self::new(StatusCode::BAD_REQUEST, "unknown_value", message)
            }
            SessionError::Model(_) => Self::new(StatusCode::BAD_REQUEST, "bad_request", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn get_model(State(app): State<Arc<AppState>>) -> Json<ModelView> {
    Json(ModelView::new(&app.space.model))
}

async fn create_session(State(app): State<Arc<AppState>>) -> ApiResult<Response> {
    let session = Session::start(Arc::clone(&app.space))?;
    let id = app.registry.insert(session);
    Ok((StatusCode::CREATED, Json(serde_json::json!({ "id": id }))).into_response())
}

async fn get_session(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<StateView>> {
    app.registry
        .with_session(&id, |session, seq| StateView::new(session, seq))
        .map(Json)
        .ok_or_else(|| ApiError::unknown_session(&id))
}

async fn assign(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<StateView>> {
    let request: AssignRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", e.to_string()))?;
    let result = app.registry.with_session(&id, |session, seq| {
        session
            .assign_named(&request.variable, &request.value)
            .map(|_| StateView::new(session, seq))
    });
    match result {
        None => Err(ApiError::unknown_session(&id)),
        Some(r) => Ok(Json(r?)),
    }
}

async fn undo(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<StateView>> {
    let result = app.registry.with_session(&id, |session, seq| {
        session.undo().map(|_| StateView::new(session, seq))
    });
    match result {
        None => Err(ApiError::unknown_session(&id)),
        Some(r) => Ok(Json(r?)),
    }
}

async fn delete_session(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    if app.registry.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::unknown_session(&id))
    }
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/model", get(get_model))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/assign", post(assign))
        .route("/sessions/{id}/undo", post(undo))
        .layer(CorsLayer::permissive())
        .with_state(app)
}

/// Serves `space` on `addr` until the process is stopped.
pub async fn serve(
    space: Arc<CompiledSpace>,
    addr: SocketAddr,
    config: ServerConfig,
) -> std::io::Result<()> {
    let app = AppState::new(space, config);
    let sweeper = Arc::clone(&app);
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(config.sweep_interval);
        loop {
            tick.tick().await;
            let evicted = sweeper.registry.evict_idle(std::time::Instant::now());
            if evicted > 0 {
                log::info!("evicted {evicted} idle sessions");
            }
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(app)).await
}
