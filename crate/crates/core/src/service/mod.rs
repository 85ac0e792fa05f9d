//! Session-oriented HTTP API.
//!
//! Sessions live in memory. Every mutation of a session runs under that
//! session's lock, so concurrent edits are serialized. Estimations copy the
//! configuration under the lock and run on the blocking pool.

mod api;
mod error;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::http::{HeaderValue, Method};
use axum::routing::{get, patch, post, put};
use axum::Router;
use parking_lot::{Mutex, RwLock};
use tower_http::cors::{Any, CorsLayer};

use crate::design::{Configuration, Design};
use crate::environment::EnvironmentScene;
use crate::ergonomics::BodyProfile;

pub use api::{
    DesignSummary, EditRequest, EditResponse, LightingRequest, LightingResponse, RasterPayload, SessionState,
    SketchRequest, SketchResponse,
};
pub use error::ApiError;

/// Upload limit for environment scans.
pub const MAX_SCAN_BYTES: usize = 512 << 20;

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub design: &'static Design,
    pub config: Configuration,
    pub env_id: Option<String>,
    pub mesh_version: u64,
    pub profiles: Vec<BodyProfile>,
}

impl Session {
    /// Replaces the committed configuration, bumping the version on change.
    fn commit(&mut self, config: &Configuration) {
        if *config != self.config {
            self.config = config.clone();
            self.mesh_version += 1;
        }
    }
}

pub(crate) struct SessionSlot {
    state: Mutex<Session>,
    /// Set while a dynamic simulation runs for this session.
    simulating: AtomicBool,
}

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
    scenes: RwLock<HashMap<String, Arc<EnvironmentScene>>>,
}

impl AppState {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    fn session(&self, id: &str) -> Result<Arc<SessionSlot>, ApiError> {
        self.sessions.read().get(id).cloned().ok_or_else(|| ApiError::not_found(format!("unknown session {id}")))
    }

    fn scene(&self, id: &str) -> Result<Arc<EnvironmentScene>, ApiError> {
        self.scenes.read().get(id).cloned().ok_or_else(|| ApiError::not_found(format!("unknown environment {id}")))
    }

    /// Committed configuration of a session.
    pub fn config(&self, id: &str) -> Option<Configuration> {
        Some(self.sessions.read().get(id)?.state.lock().config.clone())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/designs", get(api::list_designs))
        .route("/sessions", post(api::create_session))
        .route("/sessions/{id}", get(api::get_session))
        .route("/sessions/{id}/params", patch(api::patch_param))
        .route("/sessions/{id}/pose", put(api::put_pose))
        .route("/sessions/{id}/profiles", put(api::put_profiles))
        .route("/sessions/{id}/environment", put(api::put_environment))
        .route("/sessions/{id}/measure", post(api::post_measure))
        .route("/sessions/{id}/handles/{name}", post(api::post_handle))
        .route("/sessions/{id}/sketch", post(api::post_sketch))
        .route("/sessions/{id}/estimate/stability", post(api::estimate_stability))
        .route("/sessions/{id}/estimate/lighting", post(api::estimate_lighting))
        .route("/sessions/{id}/check", post(api::check))
        .route("/sessions/{id}/mesh", get(api::get_mesh))
        .route("/sessions/{id}/export.stl", get(api::export_stl))
        .route("/environment", post(api::post_environment).layer(DefaultBodyLimit::max(MAX_SCAN_BYTES)))
        .with_state(state)
}

/// CORS for the UI. `None` allows any origin.
pub fn cors(origin: Option<&str>) -> Result<CorsLayer, ApiError> {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST, Method::PUT, Method::PATCH])
        .allow_headers(Any);
    Ok(match origin {
        None => layer.allow_origin(Any),
        Some(o) => layer.allow_origin(HeaderValue::from_str(o).map_err(|e| ApiError::unprocessable(e))?),
    })
}

pub async fn serve(addr: SocketAddr, cors_origin: Option<&str>) -> std::io::Result<()> {
    let app = router(AppState::new()).layer(cors(cors_origin).map_err(|e| std::io::Error::other(e.message))?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}
