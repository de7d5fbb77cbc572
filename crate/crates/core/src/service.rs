//! Read-only HTTP API over a loaded checkpoint and an optional generated
//! library.
//!
//! | method | path              | body / result                                   |
//! |--------|-------------------|-------------------------------------------------|
//! | GET    | `/health`         | `{status, model_loaded}`                        |
//! | GET    | `/model/info`     | config, normalization table, training summary   |
//! | POST   | `/generate`       | `{valence, radius, axis, longitude, steps?}`    |
//! | POST   | `/decode`         | `{z: [3], c}` -> one frame                      |
//! | GET    | `/library`        | library manifest                                |
//! | GET    | `/library/{name}` | one library animation                           |

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{Any, CorsLayer};

use crate::anim::{load_frame_animation, Frame, FrameAnimation, JointTable};
use crate::cvae::{Checkpoint, CvaeModel};
use crate::error::{Error, Result};
use crate::metrics::{motion_metrics, MotionMetrics};
use crate::sampler::{
    decode_frames, decode_trajectory, read_library_manifest, Axis, LatentTrajectory,
    LibraryManifest, TorusGrid,
};

pub const MAX_RADIUS: f64 = 8.0;
pub const MAX_STEPS: usize = 100;

/// Everything the handlers read. Never mutated after construction.
pub struct AppState {
    model: Option<CvaeModel>,
    info: Option<Value>,
    table: JointTable,
    library: Option<(PathBuf, LibraryManifest)>,
}

impl AppState {
    pub fn new(checkpoint: Option<Checkpoint>, table: JointTable) -> Result<Self> {
        let (model, info) = match checkpoint {
            Some(ckpt) => {
                let info = json!({
                    "format_version": ckpt.format_version,
                    "latent_dim": ckpt.config.latent_dim,
                    "beta": ckpt.config.beta,
                    "config": ckpt.config,
                    "normalization_table": ckpt.normalization_table,
                    "train_report_summary": ckpt.train_report_summary,
                });
                let model = ckpt.into_model()?;
                let info = {
                    let mut v = info;
                    v["parameter_count"] = json!(model.parameter_count());
                    v
                };
                (Some(model), Some(info))
            }
            None => (None, None),
        };
        Ok(AppState {
            model,
            info,
            table,
            library: None,
        })
    }

    pub fn from_model(model: &CvaeModel, table: JointTable) -> Result<Self> {
        Self::new(Some(Checkpoint::from_model(model, None)), table)
    }

    pub fn with_library(mut self, dir: &Path) -> Result<Self> {
        let manifest = read_library_manifest(dir)?;
        self.library = Some((dir.to_path_buf(), manifest));
        Ok(self)
    }
}

/// Request body of `POST /generate`. Missing `steps` defaults to `round(5 * radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub valence: f64,
    pub radius: f64,
    pub axis: u8,
    pub longitude: usize,
    #[serde(default)]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub animation: FrameAnimation,
    pub metrics: MotionMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

fn json_response(status: StatusCode, body: String) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        body,
    )
        .into_response()
}

fn ok_json<T: Serialize>(value: &T) -> Response {
    json_response(StatusCode::OK, serde_json::to_string(value).expect("serializable"))
}

fn error_json(status: StatusCode, message: &str) -> Response {
    json_response(status, json!({ "error": message }).to_string())
}

fn unprocessable(errors: Vec<FieldError>) -> Response {
    json_response(
        StatusCode::UNPROCESSABLE_ENTITY,
        json!({ "errors": errors }).to_string(),
    )
}

fn field(field: &str, message: impl Into<String>) -> FieldError {
    FieldError {
        field: field.into(),
        message: message.into(),
    }
}

fn parse_object(body: &Bytes) -> std::result::Result<serde_json::Map<String, Value>, Response> {
    match serde_json::from_slice::<Value>(body) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(unprocessable(vec![field("body", "expected a JSON object")])),
        Err(e) => Err(unprocessable(vec![field("body", format!("invalid JSON: {e}"))])),
    }
}

fn number(obj: &serde_json::Map<String, Value>, name: &str, errors: &mut Vec<FieldError>) -> Option<f64> {
    match obj.get(name) {
        None => {
            errors.push(field(name, "required"));
            None
        }
        Some(v) => match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                errors.push(field(name, "must be a number"));
                None
            }
        },
    }
}

fn integer(obj: &serde_json::Map<String, Value>, name: &str, errors: &mut Vec<FieldError>) -> Option<u64> {
    let v = obj.get(name)?;
    if v.as_u64().is_none() {
        errors.push(field(name, "must be a non-negative integer"));
    }
    v.as_u64()
}

/// Checks every field and reports all violations at once.
pub fn validate_generate(body: &Value) -> std::result::Result<GenerateRequest, Vec<FieldError>> {
    let Some(obj) = body.as_object() else {
        return Err(vec![field("body", "expected a JSON object")]);
    };
    let mut errors = Vec::new();
    let valence = number(obj, "valence", &mut errors);
    if let Some(v) = valence {
        if !(0.0..=1.0).contains(&v) {
            errors.push(field("valence", "must be in [0, 1]"));
        }
    }
    let radius = number(obj, "radius", &mut errors);
    if let Some(r) = radius {
        if !(r > 0.0 && r <= MAX_RADIUS) {
            errors.push(field("radius", format!("must be in (0, {MAX_RADIUS}]")));
        }
    }
    if !obj.contains_key("axis") {
        errors.push(field("axis", "required"));
    }
    let axis = integer(obj, "axis", &mut errors);
    if let Some(a) = axis {
        if !(1..=3).contains(&a) {
            errors.push(field("axis", "must be 1, 2 or 3"));
        }
    }
    if !obj.contains_key("longitude") {
        errors.push(field("longitude", "required"));
    }
    let longitude = integer(obj, "longitude", &mut errors);
    if let Some(k) = longitude {
        if k > 7 {
            errors.push(field("longitude", "must be in 0..=7"));
        }
    }
    let steps = match obj.get("steps") {
        None | Some(Value::Null) => None,
        Some(_) => integer(obj, "steps", &mut errors),
    };
    if let Some(s) = steps {
        if !(1..=MAX_STEPS as u64).contains(&s) {
            errors.push(field("steps", format!("must be in 1..={MAX_STEPS}")));
        }
    }
    let known = ["valence", "radius", "axis", "longitude", "steps"];
    for k in obj.keys().filter(|k| !known.contains(&k.as_str())) {
        errors.push(field(k, "unknown field"));
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(GenerateRequest {
        valence: valence.expect("checked"),
        radius: radius.expect("checked"),
        axis: axis.expect("checked") as u8,
        longitude: longitude.expect("checked") as usize,
        steps: steps.map(|s| s as usize),
    })
}

pub fn default_steps(radius: f64) -> usize {
    ((5.0 * radius).round() as usize).clamp(1, MAX_STEPS)
}

/// Decodes one torus longitude; the pure core of `POST /generate`.
pub fn generate(
    model: &CvaeModel,
    table: &JointTable,
    req: &GenerateRequest,
) -> Result<GenerateResponse> {
    let axis = Axis::try_from(req.axis)?;
    let grid = TorusGrid::new(req.radius, axis)?;
    let steps = req.steps.unwrap_or_else(|| default_steps(req.radius));
    let trajectory = LatentTrajectory::from_torus(&grid, req.longitude, steps)?;
    let animation = decode_trajectory(model, &trajectory, req.valence, table)?;
    let metrics = motion_metrics(&animation);
    Ok(GenerateResponse { animation, metrics })
}

fn internal(e: Error) -> Response {
    error_json(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string())
}

fn no_model() -> Response {
    error_json(StatusCode::SERVICE_UNAVAILABLE, "no model loaded")
}

async fn health(State(s): State<Arc<AppState>>) -> Response {
    ok_json(&json!({ "status": "ok", "model_loaded": s.model.is_some() }))
}

async fn model_info(State(s): State<Arc<AppState>>) -> Response {
    match &s.info {
        Some(info) => ok_json(info),
        None => no_model(),
    }
}

async fn generate_handler(State(s): State<Arc<AppState>>, body: Bytes) -> Response {
    let obj = match parse_object(&body) {
        Ok(o) => Value::Object(o),
        Err(r) => return r,
    };
    let req = match validate_generate(&obj) {
        Ok(r) => r,
        Err(errors) => return unprocessable(errors),
    };
    if s.model.is_none() {
        return no_model();
    }
    let state = s.clone();
    let result = tokio::task::spawn_blocking(move || {
        generate(state.model.as_ref().expect("checked"), &state.table, &req)
    })
    .await;
    match result {
        Ok(Ok(resp)) => ok_json(&resp),
        Ok(Err(e)) => internal(e),
        Err(e) => error_json(StatusCode::INTERNAL_SERVER_ERROR, &e.to_string()),
    }
}

async fn decode_handler(State(s): State<Arc<AppState>>, body: Bytes) -> Response {
    let obj = match parse_object(&body) {
        Ok(o) => o,
        Err(r) => return r,
    };
    let mut errors = Vec::new();
    let z: Option<[f64; 3]> = match obj.get("z") {
        None => {
            errors.push(field("z", "required"));
            None
        }
        Some(Value::Array(items)) if items.len() == 3 => {
            let vals: Vec<f64> = items.iter().filter_map(Value::as_f64).filter(|x| x.is_finite()).collect();
            if vals.len() == 3 {
                Some([vals[0], vals[1], vals[2]])
            } else {
                errors.push(field("z", "entries must be numbers"));
                None
            }
        }
        Some(Value::Array(items)) => {
            errors.push(field("z", format!("must have 3 entries, got {}", items.len())));
            None
        }
        Some(_) => {
            errors.push(field("z", "must be an array of 3 numbers"));
            None
        }
    };
    let c = number(&obj, "c", &mut errors);
    if let Some(c) = c {
        if !(0.0..=1.0).contains(&c) {
            errors.push(field("c", "must be in [0, 1]"));
        }
    }
    if !errors.is_empty() {
        return unprocessable(errors);
    }
    let Some(model) = &s.model else {
        return no_model();
    };
    let (z, c) = (z.expect("checked"), c.expect("checked"));
    match decode_frames(model, &[[z[0], z[1], z[2], c]], &s.table) {
        Ok(mut frames) => {
            let frame: Frame = frames.remove(0);
            ok_json(&frame)
        }
        Err(e) => internal(e),
    }
}

async fn library_manifest(State(s): State<Arc<AppState>>) -> Response {
    match &s.library {
        Some((_, manifest)) => ok_json(manifest),
        None => error_json(StatusCode::NOT_FOUND, "no library loaded"),
    }
}

async fn library_entry(State(s): State<Arc<AppState>>, UrlPath(name): UrlPath<String>) -> Response {
    let Some((dir, manifest)) = &s.library else {
        return error_json(StatusCode::NOT_FOUND, "no library loaded");
    };
    let Some(entry) = manifest.animations.iter().find(|e| e.name == name) else {
        return error_json(StatusCode::NOT_FOUND, &format!("no animation named {name:?}"));
    };
    match load_frame_animation(&dir.join(&entry.file), &s.table) {
        Ok(a) => ok_json(&a),
        Err(e) => internal(e),
    }
}

/// Allowed browser origin; `None` allows any origin.
pub fn router(state: AppState, cors_origin: Option<&str>) -> Result<Router> {
    let cors = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    let cors = match cors_origin {
        None => cors.allow_origin(Any),
        Some(o) => cors.allow_origin(
            o.parse::<HeaderValue>()
                .map_err(|e| Error::Invalid(format!("bad CORS origin {o:?}: {e}")))?,
        ),
    };
    Ok(Router::new()
        .route("/health", get(health))
        .route("/model/info", get(model_info))
        .route("/generate", post(generate_handler))
        .route("/decode", post(decode_handler))
        .route("/library", get(library_manifest))
        .route("/library/{name}", get(library_entry))
        .layer(cors)
        .with_state(Arc::new(state)))
}

/// Binds `addr` first so a busy port is reported before serving.
pub async fn bind(addr: SocketAddr) -> Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Invalid(format!("cannot listen on {addr}: {e}")))
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::Invalid(format!("server error: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_errors_are_collected() {
        let errs = validate_generate(&json!({"valence": 2, "radius": 0, "axis": 4, "longitude": 9}))
            .unwrap_err();
        let fields: Vec<_> = errs.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, ["valence", "radius", "axis", "longitude"]);
        let errs = validate_generate(&json!({"valence": 0.5})).unwrap_err();
        assert_eq!(errs.len(), 3);
        let errs = validate_generate(&json!({"valence": 0.5, "radius": 3, "axis": 1, "longitude": 0, "steps": 0, "x": 1}))
            .unwrap_err();
        assert_eq!(errs.len(), 2);
    }

    #[test]
    fn steps_default_from_radius() {
        assert_eq!(default_steps(3.0), 15);
        assert_eq!(default_steps(4.0), 20);
        assert_eq!(default_steps(5.0), 25);
        assert_eq!(default_steps(0.01), 1);
        let req = validate_generate(&json!({"valence": 0.5, "radius": 3, "axis": 3, "longitude": 0})).unwrap();
        assert_eq!(req.steps, None);
    }
}
