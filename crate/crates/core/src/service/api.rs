use std::collections::BTreeMap;
use std::sync::atomic::Ordering;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ApiError, AppState, Session, SessionSlot};
use crate::design::{
    apply_handle_drag, bind_measurement, measure_distance, set_parameter, set_pose, validate, Configuration, Design,
    EditMode, EditOutcome, ParamKind, ParamValue, ParameterDef, Violation,
};
use crate::dsl::{builtin, list_builtin};
use crate::environment::{load_scene_with, AxisRemap, EnvironmentScene, ScanFormat, SceneSummary, SupportPlane, DEFAULT_SEED};
use crate::ergonomics::{recommended_ranges, BodyProfile, ErgonomicTag, RecommendedRange};
use crate::estimators::{
    check_requirements, estimate_stability as run_stability, estimate_stability_in, ClauseResult, LightSample,
    PointLight, RasterExtent, RequirementSpec, StabilityReport,
};
use crate::geometry::{export_stl as stl_bytes, generate_mesh, TriangleMesh};
use crate::math::Vec3;
use crate::sketch::{apply_curve, default_tolerance, fit_bezier_path, project_stroke_about, FitResult, Stroke};

/// JSON body whose every failure maps to 422.
pub struct JsonBody<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for JsonBody<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state).await.map_err(|e| ApiError::unprocessable(e.body_text()))?;
        Ok(JsonBody(serde_json::from_slice(&bytes)?))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErgonomicParam {
    pub parameter: String,
    pub tag: ErgonomicTag,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignSummary {
    pub id: String,
    pub generator: String,
    pub parameters: Vec<ParameterDef>,
    pub groups: Vec<String>,
    pub constraints: Vec<String>,
    pub ergonomic: Vec<ErgonomicParam>,
}

impl DesignSummary {
    pub fn of(d: &Design) -> Self {
        let mut groups: Vec<String> = Vec::new();
        for p in &d.parameters {
            if !groups.contains(&p.group) {
                groups.push(p.group.clone());
            }
        }
        Self {
            id: d.id.clone(),
            generator: d.generator.generator.name().to_string(),
            parameters: d.parameters.clone(),
            groups,
            constraints: d.constraints.iter().map(|c| c.to_string()).collect(),
            ergonomic: d
                .parameters
                .iter()
                .filter_map(|p| Some(ErgonomicParam { parameter: p.name.clone(), tag: p.ergonomic.as_ref()?.tag }))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    pub env_id: Option<String>,
    pub mesh_version: u64,
    #[serde(flatten)]
    pub config: Configuration,
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub profiles: Vec<BodyProfile>,
    pub recommended_ranges: Option<BTreeMap<String, RecommendedRange>>,
}

fn state_of(s: &Session) -> Result<SessionState, ApiError> {
    let report = validate(s.design, &s.config)?;
    let ranges = if s.profiles.is_empty() {
        None
    } else {
        Some(recommended_ranges(s.design, &s.config, &s.profiles)?)
    };
    Ok(SessionState {
        id: s.id.clone(),
        env_id: s.env_id.clone(),
        mesh_version: s.mesh_version,
        config: s.config.clone(),
        valid: report.is_valid(),
        violations: report.violations,
        profiles: s.profiles.clone(),
        recommended_ranges: ranges,
    })
}

/// Rejects the request when an `If-Match` version is given and stale.
fn precondition(headers: &HeaderMap, s: &Session) -> Result<(), ApiError> {
    let Some(h) = headers.get(header::IF_MATCH) else { return Ok(()) };
    let text = h.to_str().unwrap_or("").trim().trim_start_matches("W/").trim_matches('"');
    let expected: u64 = text.parse().map_err(|_| ApiError::unprocessable("If-Match must be a mesh version"))?;
    if expected != s.mesh_version {
        return Err(ApiError::conflict(format!("stale mesh_version {expected}, current is {}", s.mesh_version)));
    }
    Ok(())
}

fn etag(version: u64) -> [(header::HeaderName, String); 1] {
    [(header::ETAG, format!("\"{version}\""))]
}

pub async fn list_designs() -> Json<Vec<DesignSummary>> {
    Json(list_builtin().iter().map(DesignSummary::of).collect())
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub design_id: String,
    #[serde(default)]
    pub env_id: Option<String>,
}

pub async fn create_session(
    State(app): State<Arc<AppState>>,
    JsonBody(req): JsonBody<CreateSession>,
) -> Result<(StatusCode, Json<SessionState>), ApiError> {
    let design = builtin(&req.design_id).ok_or_else(|| ApiError::not_found(format!("unknown design {}", req.design_id)))?;
    if let Some(env) = &req.env_id {
        app.scene(env)?;
    }
    let session = Session {
        id: uuid::Uuid::new_v4().simple().to_string(),
        design,
        config: design.default_configuration(),
        env_id: req.env_id,
        mesh_version: 0,
        profiles: Vec::new(),
    };
    let out = state_of(&session)?;
    let slot = SessionSlot { state: parking_lot::Mutex::new(session), simulating: Default::default() };
    app.sessions.write().insert(out.id.clone(), Arc::new(slot));
    Ok((StatusCode::CREATED, Json(out)))
}

pub async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionState>, ApiError> {
    let slot = app.session(&id)?;
    let s = slot.state.lock();
    Ok(Json(state_of(&s)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EditRequest {
    pub name: String,
    pub value: ParamValue,
    #[serde(default)]
    pub mode: Option<EditMode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EditResponse {
    pub snapped_back: bool,
    pub violation: Option<Violation>,
    pub mesh_version: u64,
    pub outcome: EditOutcome,
}

fn apply_edit(s: &mut Session, outcome: EditOutcome) -> EditResponse {
    if let Some(c) = outcome.committed() {
        s.commit(&c.clone());
    }
    let violation = match &outcome {
        EditOutcome::SnappedBack(b) => Some(b.violation.clone()),
        _ => None,
    };
    EditResponse { snapped_back: outcome.is_snapped_back(), violation, mesh_version: s.mesh_version, outcome }
}

/// Runs `edit` on the session under its lock.
fn edit_session<T>(
    app: &AppState,
    id: &str,
    headers: &HeaderMap,
    edit: impl FnOnce(&mut Session) -> Result<T, ApiError>,
) -> Result<T, ApiError> {
    let slot = app.session(id)?;
    let mut s = slot.state.lock();
    precondition(headers, &s)?;
    edit(&mut s)
}

pub async fn patch_param(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    JsonBody(req): JsonBody<EditRequest>,
) -> Result<Json<EditResponse>, ApiError> {
    edit_session(&app, &id, &headers, |s| {
        let outcome = set_parameter(s.design, &s.config, &req.name, req.value, req.mode.unwrap_or(EditMode::Commit))?;
        Ok(Json(apply_edit(s, outcome)))
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseRequest {
    pub position: Vec3,
    pub yaw: f64,
}

pub async fn put_pose(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    JsonBody(req): JsonBody<PoseRequest>,
) -> Result<Json<SessionState>, ApiError> {
    if !(req.position.iter().all(|c| c.is_finite()) && req.yaw.is_finite()) {
        return Err(ApiError::unprocessable("pose must be finite"));
    }
    edit_session(&app, &id, &headers, |s| {
        let next = set_pose(&s.config, req.position, req.yaw);
        s.commit(&next);
        Ok(Json(state_of(s)?))
    })
}

pub async fn put_profiles(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    JsonBody(profiles): JsonBody<Vec<BodyProfile>>,
) -> Result<Json<SessionState>, ApiError> {
    for p in &profiles {
        p.check()?;
    }
    edit_session(&app, &id, &HeaderMap::new(), |s| {
        s.profiles = profiles;
        Ok(Json(state_of(s)?))
    })
}

#[derive(Debug, Deserialize)]
pub struct EnvironmentRef {
    pub env_id: Option<String>,
}

pub async fn put_environment(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    JsonBody(req): JsonBody<EnvironmentRef>,
) -> Result<Json<SessionState>, ApiError> {
    if let Some(env) = &req.env_id {
        app.scene(env)?;
    }
    edit_session(&app, &id, &HeaderMap::new(), |s| {
        s.env_id = req.env_id;
        Ok(Json(state_of(s)?))
    })
}

#[derive(Debug, Deserialize)]
pub struct MeasureRequest {
    pub name: String,
    pub from: Vec3,
    pub to: Vec3,
}

pub async fn post_measure(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    JsonBody(req): JsonBody<MeasureRequest>,
) -> Result<Json<EditResponse>, ApiError> {
    edit_session(&app, &id, &headers, |s| {
        let outcome = bind_measurement(s.design, &s.config, &req.name, measure_distance(&req.from, &req.to))?;
        Ok(Json(apply_edit(s, outcome)))
    })
}

#[derive(Debug, Deserialize)]
pub struct HandleRequest {
    pub point: Vec3,
    #[serde(default)]
    pub mode: Option<EditMode>,
}

pub async fn post_handle(
    State(app): State<Arc<AppState>>,
    Path((id, name)): Path<(String, String)>,
    headers: HeaderMap,
    JsonBody(req): JsonBody<HandleRequest>,
) -> Result<Json<EditResponse>, ApiError> {
    edit_session(&app, &id, &headers, |s| {
        let outcome = apply_handle_drag(s.design, &s.config, &name, req.point, req.mode.unwrap_or(EditMode::Commit))?;
        Ok(Json(apply_edit(s, outcome)))
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SketchRequest {
    pub stroke: Stroke,
    pub param: String,
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SketchResponse {
    pub fit: FitResult,
    #[serde(flatten)]
    pub edit: EditResponse,
}

pub async fn post_sketch(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    JsonBody(req): JsonBody<SketchRequest>,
) -> Result<Json<SketchResponse>, ApiError> {
    edit_session(&app, &id, &headers, |s| {
        let def = s.design.param(&req.param).ok_or_else(|| ApiError::unprocessable(format!("unknown parameter {}", req.param)))?;
        let ParamKind::Curve { segment_budget, .. } = def.kind else {
            return Err(ApiError::unprocessable(format!("{} is not a curve parameter", req.param)));
        };
        let pts = project_stroke_about(&req.stroke, &s.config.pose.position)?;
        let tol = req.tolerance.unwrap_or_else(|| default_tolerance(&pts));
        let fit = fit_bezier_path(&pts, req.budget.unwrap_or(segment_budget).min(segment_budget), tol)?;
        let applied = apply_curve(s.design, &s.config, &req.param, &fit)?;
        Ok(Json(SketchResponse { fit: applied.fit, edit: apply_edit(s, applied.outcome) }))
    })
}

struct Snapshot {
    design: &'static Design,
    config: Configuration,
    scene: Option<Arc<EnvironmentScene>>,
}

fn snapshot(app: &AppState, slot: &SessionSlot) -> Result<Snapshot, ApiError> {
    let s = slot.state.lock();
    let scene = s.env_id.as_deref().map(|e| app.scene(e)).transpose()?;
    Ok(Snapshot { design: s.design, config: s.config.clone(), scene })
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

struct SimulationGuard(Arc<SessionSlot>);

impl Drop for SimulationGuard {
    fn drop(&mut self) {
        self.0.simulating.store(false, Ordering::Release);
    }
}

pub async fn estimate_stability(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<StabilityReport>, ApiError> {
    let slot = app.session(&id)?;
    let snap = snapshot(&app, &slot)?;
    if slot.simulating.swap(true, Ordering::AcqRel) {
        return Err(ApiError::conflict("a stability simulation is already running for this session"));
    }
    let guard = SimulationGuard(slot);
    let report = blocking(move || {
        let _guard = guard;
        let mesh = generate_mesh(snap.design, &snap.config)?;
        Ok(match &snap.scene {
            Some(scene) => estimate_stability_in(&mesh, scene)?,
            None => run_stability(&mesh, &SupportPlane::horizontal(mesh.bbox().min.y))?,
        })
    })
    .await?;
    Ok(Json(report))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LightingRequest {
    pub light: PointLight,
    #[serde(default)]
    pub extent: Option<RasterExtent>,
    /// Include the per-sample list in the response.
    #[serde(default)]
    pub samples: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RasterPayload {
    pub width: usize,
    pub height: usize,
    pub extent: RasterExtent,
    pub pgm_base64: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LightingResponse {
    pub shadow_coverage: f64,
    pub mean_illuminance: f64,
    pub raster: RasterPayload,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<Vec<LightSample>>,
}

pub async fn estimate_lighting(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    JsonBody(req): JsonBody<LightingRequest>,
) -> Result<Json<LightingResponse>, ApiError> {
    let slot = app.session(&id)?;
    let snap = snapshot(&app, &slot)?;
    let scene = snap.scene.ok_or_else(|| ApiError::unprocessable("session has no environment"))?;
    let (design, config) = (snap.design, snap.config);
    let report = blocking(move || {
        let mesh = generate_mesh(design, &config)?;
        Ok(crate::estimators::estimate_lighting(&mesh, &scene, &req.light, req.extent)?)
    })
    .await?;
    let r = &report.shadow_raster;
    Ok(Json(LightingResponse {
        shadow_coverage: report.shadow_coverage,
        mean_illuminance: report.mean_illuminance,
        raster: RasterPayload {
            width: r.width,
            height: r.height,
            extent: r.extent,
            pgm_base64: base64::engine::general_purpose::STANDARD.encode(r.to_pgm()),
        },
        samples: req.samples.then_some(report.samples),
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResponse {
    pub all_passed: bool,
    pub results: Vec<ClauseResult>,
}

pub async fn check(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    JsonBody(spec): JsonBody<RequirementSpec>,
) -> Result<Json<CheckResponse>, ApiError> {
    let slot = app.session(&id)?;
    let snap = snapshot(&app, &slot)?;
    let results = blocking(move || {
        let mesh = generate_mesh(snap.design, &snap.config)?;
        Ok(check_requirements(snap.design, &snap.config, &mesh, snap.scene.as_deref(), &spec)?)
    })
    .await?;
    Ok(Json(CheckResponse { all_passed: results.iter().all(|r| r.passed), results }))
}

#[derive(Debug, Deserialize)]
pub struct MeshQuery {
    pub version: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshPayload {
    pub mesh_version: u64,
    pub mesh: TriangleMesh,
}

fn session_mesh(app: &AppState, id: &str) -> Result<(u64, String, TriangleMesh), ApiError> {
    let slot = app.session(id)?;
    let (design, config, version) = {
        let s = slot.state.lock();
        (s.design, s.config.clone(), s.mesh_version)
    };
    Ok((version, design.id.clone(), generate_mesh(design, &config)?))
}

pub async fn get_mesh(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<MeshQuery>,
) -> Result<Response, ApiError> {
    let current = app.session(&id)?.state.lock().mesh_version;
    if q.version == Some(current) {
        return Ok((StatusCode::NOT_MODIFIED, etag(current)).into_response());
    }
    let (version, _, mesh) = session_mesh(&app, &id)?;
    Ok((etag(version), Json(MeshPayload { mesh_version: version, mesh })).into_response())
}

pub async fn export_stl(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let (version, design_id, mesh) = session_mesh(&app, &id)?;
    let headers = [
        (header::CONTENT_TYPE, "model/stl".to_string()),
        (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{design_id}.stl\"")),
        (header::ETAG, format!("\"{version}\"")),
    ];
    Ok((headers, stl_bytes(&mesh)?).into_response())
}

#[derive(Debug, Deserialize)]
pub struct EnvironmentQuery {
    #[serde(default)]
    pub format: Option<ScanFormat>,
    #[serde(default)]
    pub up: Option<AxisRemap>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvironmentCreated {
    pub env_id: String,
    #[serde(flatten)]
    pub summary: SceneSummary,
}

pub async fn post_environment(
    State(app): State<Arc<AppState>>,
    Query(q): Query<EnvironmentQuery>,
    body: Bytes,
) -> Result<(StatusCode, Json<EnvironmentCreated>), ApiError> {
    let format = q.format.unwrap_or(ScanFormat::Obj);
    let scene = blocking(move || {
        Ok(load_scene_with(&body, format, q.up.unwrap_or_default(), q.seed.unwrap_or(DEFAULT_SEED))?)
    })
    .await?;
    let env_id = uuid::Uuid::new_v4().simple().to_string();
    let summary = scene.summary();
    app.scenes.write().insert(env_id.clone(), Arc::new(scene));
    Ok((StatusCode::CREATED, Json(EnvironmentCreated { env_id, summary })))
}
