//! HTTP routes. JSON bodies in and out; artifacts download as attachments.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/limits` | printable envelope for UI sliders |
//! | POST | `/validate` | violation report for a spec |
//! | GET, POST | `/jobs` | list, create (mesh as base64) |
//! | GET | `/jobs/{id}` | state snapshot |
//! | GET | `/jobs/{id}/violations` | violation report |
//! | GET | `/jobs/{id}/preview` | preview scene JSON |
//! | GET | `/jobs/{id}/plan` | injection plan JSON |
//! | POST | `/jobs/{id}/generate`, `/plan`, `/postprocess` | queue a step |
//! | GET | `/jobs/{id}/artifacts/{name}` | download |
//! | GET | `/queue` | worker status |

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use magdisplay::constraints::{limits, CellSpec, PrinterProfile};
use magdisplay::mesh::{read_mesh, MeshFormat};
use magdisplay::pipeline::{cmd_validate, Job, PLAN_JSON, PREVIEW_JSON};
use magdisplay::Error;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::queue::{Action, JobQueue};

#[derive(Clone)]
pub struct AppState {
    pub queue: JobQueue,
}

impl AppState {
    pub fn new() -> Self {
        AppState {
            queue: JobQueue::start(),
        }
    }
}

impl Default for AppState {
    fn default() -> Self {
        Self::new()
    }
}

/// Error payload: `{"error": {"code", "message", "exit_code"}}`, where
/// `exit_code` is what the CLI would have exited with.
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    exit_code: i32,
    details: serde_json::Value,
}

impl ApiError {
    fn not_found(what: String) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            code: "not_found".into(),
            message: what,
            exit_code: 2,
            details: serde_json::Value::Null,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::JobState(_) => StatusCode::CONFLICT,
            Error::Parse(_) | Error::Config(_) | Error::InvalidArgument(_) => StatusCode::BAD_REQUEST,
            Error::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let details = match &e {
            Error::SpecInvalid(v) => json!(v),
            _ => serde_json::Value::Null,
        };
        ApiError {
            status,
            code: e.code().into(),
            message: e.to_string(),
            exit_code: e.exit_code(),
            details,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {
            "code": self.code,
            "message": self.message,
            "exit_code": self.exit_code,
            "details": self.details,
        }});
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/limits", get(get_limits))
        .route("/validate", post(validate))
        .route("/jobs", get(list_jobs).post(create_job))
        .route("/jobs/{id}", get(job_state))
        .route("/jobs/{id}/violations", get(violations))
        .route("/jobs/{id}/preview", get(preview))
        .route("/jobs/{id}/plan", get(plan).post(trigger_plan))
        .route("/jobs/{id}/generate", post(trigger_generate))
        .route("/jobs/{id}/postprocess", post(trigger_postprocess))
        .route("/jobs/{id}/artifacts/{name}", get(artifact))
        .route("/queue", get(queue_status))
        .with_state(state)
}

async fn get_limits() -> Json<magdisplay::constraints::Limits> {
    Json(limits(&PrinterProfile::default()))
}

#[derive(Deserialize)]
pub struct ValidateRequest {
    pub spec: CellSpec,
    #[serde(default)]
    pub profile: PrinterProfile,
}

async fn validate(Json(req): Json<ValidateRequest>) -> Response {
    let report = cmd_validate(&req.spec, &req.profile);
    Json(report).into_response()
}

#[derive(Serialize, Deserialize)]
pub struct CreateJob {
    #[serde(default = "default_name")]
    pub name: String,
    pub mesh_format: MeshFormat,
    /// Mesh file bytes, standard base64.
    pub mesh_base64: String,
    pub spec: CellSpec,
    #[serde(default)]
    pub profile: PrinterProfile,
}

fn default_name() -> String {
    "model".into()
}

#[derive(Serialize)]
struct Accepted {
    id: u64,
    state: &'static str,
    activity: &'static str,
    position: Option<usize>,
}

async fn create_job(State(s): State<AppState>, Json(req): Json<CreateJob>) -> ApiResult<(StatusCode, Json<Accepted>)> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(req.mesh_base64.as_bytes())
        .map_err(|e| Error::Parse(format!("mesh_base64: {e}")))?;
    let mesh = read_mesh(&bytes, req.mesh_format)?;
    let problems = magdisplay::constraints::validate_profile(&req.profile);
    if !problems.is_empty() {
        return Err(Error::Config(problems.join("; ")).into());
    }
    let id = s
        .queue
        .create(|id| Job::new(id, req.name, mesh, req.spec, req.profile));
    Ok((
        StatusCode::CREATED,
        Json(Accepted {
            id,
            state: "created",
            activity: "idle",
            position: None,
        }),
    ))
}

async fn list_jobs(State(s): State<AppState>) -> Json<serde_json::Value> {
    let jobs: Vec<_> = s
        .queue
        .ids()
        .into_iter()
        .filter_map(|id| s.queue.read(id, |j| json!({"id": id, "name": j.name, "state": j.state()})))
        .collect();
    Json(json!({ "jobs": jobs }))
}

fn read<T>(s: &AppState, id: u64, f: impl FnOnce(&Job) -> T) -> ApiResult<T> {
    s.queue.read(id, f).ok_or_else(|| ApiError::not_found(format!("no job {id}")))
}

async fn job_state(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<serde_json::Value>> {
    let summary = read(&s, id, |j| j.summary())?;
    let mut v = serde_json::to_value(summary).expect("job summary serializes");
    v["activity"] = json!(s.queue.activity(id));
    Ok(Json(v))
}

async fn violations(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<Response> {
    Ok(Json(read(&s, id, |j| j.violations())?).into_response())
}

fn json_artifact(s: &AppState, id: u64, name: &str) -> ApiResult<Response> {
    let bytes = read(s, id, |j| j.artifact(name).map(<[u8]>::to_vec))?
        .ok_or_else(|| ApiError::not_found(format!("job {id} has no {name} yet")))?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

async fn preview(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<Response> {
    json_artifact(&s, id, PREVIEW_JSON)
}

async fn plan(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<Response> {
    json_artifact(&s, id, PLAN_JSON)
}

fn trigger(s: &AppState, id: u64, action: Action) -> ApiResult<(StatusCode, Json<Accepted>)> {
    let state = read(s, id, |j| j.state().as_str())?;
    let position = s.queue.enqueue(id, action)?;
    Ok((
        StatusCode::ACCEPTED,
        Json(Accepted {
            id,
            state,
            activity: s.queue.activity(id),
            position: Some(position),
        }),
    ))
}

async fn trigger_generate(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<(StatusCode, Json<Accepted>)> {
    trigger(&s, id, Action::Generate)
}

async fn trigger_plan(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<(StatusCode, Json<Accepted>)> {
    trigger(&s, id, Action::Plan)
}

#[derive(Default, Deserialize)]
pub struct PostprocessRequest {
    /// Slicer output; omitted means synthesized perimeters.
    pub gcode: Option<String>,
}

async fn trigger_postprocess(
    State(s): State<AppState>,
    Path(id): Path<u64>,
    body: Option<Json<PostprocessRequest>>,
) -> ApiResult<(StatusCode, Json<Accepted>)> {
    let gcode = body.and_then(|Json(b)| b.gcode);
    trigger(&s, id, Action::Postprocess { gcode })
}

async fn artifact(State(s): State<AppState>, Path((id, name)): Path<(u64, String)>) -> ApiResult<Response> {
    let bytes = read(&s, id, |j| j.artifact(&name).map(<[u8]>::to_vec))?
        .ok_or_else(|| ApiError::not_found(format!("job {id} has no artifact {name}")))?;
    let kind = match name.rsplit('.').next() {
        Some("json") => "application/json",
        Some("gcode") => "text/x-gcode",
        Some("stl") => "model/stl",
        _ => "application/octet-stream",
    };
    Ok((
        [
            (header::CONTENT_TYPE, kind.to_string()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{name}\"")),
        ],
        bytes,
    )
        .into_response())
}

async fn queue_status(State(s): State<AppState>) -> Json<crate::queue::QueueStatus> {
    Json(s.queue.status())
}

/// Serves on `127.0.0.1:port` until the process ends.
pub async fn serve(port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new())).await
}
