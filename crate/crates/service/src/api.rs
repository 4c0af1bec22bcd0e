//! HTTP endpoints for running sessions from a browser console.
//!
//! Every request and response body carries `schema_version`. Request
//! bodies reject unknown fields. Errors come back as
//! `{"schema_version":1,"error":{"code":..,"message":..}}` with optional
//! `fields` (invalid request paths) and `details`.
//!
//! | method | path | body |
//! |---|---|---|
//! | GET | `/v1/health` | |
//! | GET | `/v1/calibrations` | |
//! | GET, POST | `/v1/sessions` | [`CreateSessionRequest`] on POST; `Idempotency-Key` header honoured |
//! | GET | `/v1/sessions/{id}` | |
//! | POST | `/v1/sessions/{id}/start` | `{"schema_version":1}` |
//! | GET | `/v1/sessions/{id}/stimulus` | |
//! | POST | `/v1/sessions/{id}/responses` | [`SubmitRequest`] |
//! | POST | `/v1/sessions/{id}/rest-ack` | `{"schema_version":1}` |
//! | POST | `/v1/sessions/{id}/suspend` | [`SuspendRequest`] |
//! | POST | `/v1/sessions/{id}/resume` | `{"schema_version":1}` |
//! | GET | `/v1/sessions/{id}/results` | |
//! | GET | `/v1/sessions/{id}/document` | |

use std::collections::{BTreeMap, HashMap};
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{Html, IntoResponse, Response as HttpResponse};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use visbench::calibration::CalibrationProfile;
use visbench::session::{
    build_plan, Ack, Clock, Condition, FileStore, Progress, Response, Session, SessionDocument, SessionPlan,
    SessionResult, SessionStatus, StimulusDescriptor, TestKind,
};

pub const SCHEMA_VERSION: u32 = 1;

const CONSOLE_PAGE: &str = include_str!("../assets/index.html");
const MAX_SESSION_ID_LEN: usize = 64;

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub fields: Vec<String>,
    pub details: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.into(),
            message: message.into(),
            fields: Vec::new(),
            details: None,
        }
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "session_not_found", format!("no session {id:?}"))
    }
}

impl From<visbench::Error> for ApiError {
    fn from(e: visbench::Error) -> Self {
        use visbench::Error as E;
        let message = e.to_string();
        match e {
            E::HueGate { remaining_ms } => Self::new(StatusCode::CONFLICT, "hue_min_duration", message).with_details(json!({
                "remaining_ms": remaining_ms,
                "remaining_seconds": remaining_ms as f64 / 1000.0,
            })),
            E::Sequence { expected, got } => Self::new(StatusCode::CONFLICT, "sequence_conflict", message)
                .with_details(json!({ "expected": expected, "got": got })),
            E::State(_) => Self::new(StatusCode::CONFLICT, "invalid_state", message),
            E::Io { .. } | E::Csv(_) | E::Disconnected => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message),
            other => Self::new(StatusCode::UNPROCESSABLE_ENTITY, other.code(), message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> HttpResponse {
        let mut error = json!({ "code": self.code, "message": self.message });
        if !self.fields.is_empty() {
            error["fields"] = json!(self.fields);
        }
        if let Some(d) = self.details {
            error["details"] = d;
        }
        (self.status, Json(json!({ "schema_version": SCHEMA_VERSION, "error": error }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub schema_version: u32,
    /// Chosen by the server when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    pub participant_index: u32,
    /// Defaults to `P{index+1:03}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participant_id: Option<String>,
    /// In canonical order; the plan counterbalances them.
    pub conditions: Vec<Condition>,
    pub seed: u64,
    pub calibration_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hue_min_duration_ms: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitRequest {
    pub schema_version: u32,
    pub seq: u64,
    pub response: Response,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuspendRequest {
    pub schema_version: u32,
    #[serde(default)]
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmptyRequest {
    pub schema_version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionView {
    pub schema_version: u32,
    pub session_id: String,
    pub status: SessionStatus,
    pub plan: SessionPlan,
    pub progress: Progress,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hue_remaining_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimulusView {
    pub schema_version: u32,
    pub session_id: String,
    pub stimulus: StimulusDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hue_remaining_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AckView {
    pub schema_version: u32,
    pub session_id: String,
    pub ack: Ack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgressView {
    pub schema_version: u32,
    pub session_id: String,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsView {
    pub schema_version: u32,
    pub session_id: String,
    /// True until the first test completes.
    pub empty: bool,
    pub result: SessionResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IdempotencyRecord {
    key: String,
    request: Value,
    session_id: String,
}

pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Served in addition to the built-in reference profile.
    pub calibrations: Vec<CalibrationProfile>,
    pub clock: Arc<dyn Clock>,
}

pub struct AppState {
    store: FileStore,
    calibrations: BTreeMap<String, CalibrationProfile>,
    clock: Arc<dyn Clock>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    idempotency: Mutex<HashMap<String, IdempotencyRecord>>,
    idempotency_path: PathBuf,
}

impl AppState {
    pub fn open(config: ServiceConfig) -> visbench::Result<Arc<Self>> {
        std::fs::create_dir_all(&config.data_dir).map_err(|e| io_error(&config.data_dir, e))?;
        let store = FileStore::open(config.data_dir.join("sessions"))?;
        let mut calibrations = BTreeMap::new();
        let reference = CalibrationProfile::reference();
        calibrations.insert(reference.id.clone(), reference);
        for c in config.calibrations {
            c.validate()?;
            calibrations.insert(c.id.clone(), c);
        }
        let idempotency_path = config.data_dir.join("idempotency.jsonl");
        let idempotency = load_idempotency(&idempotency_path)?;
        Ok(Arc::new(Self {
            store,
            calibrations,
            clock: config.clock,
            sessions: Mutex::new(HashMap::new()),
            idempotency: Mutex::new(idempotency),
            idempotency_path,
        }))
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        if !valid_session_id(id) {
            return Err(ApiError::not_found(id));
        }
        let mut sessions = self.sessions.lock().expect("session map poisoned");
        if let Some(s) = sessions.get(id) {
            return Ok(Arc::clone(s));
        }
        if !self.store.exists(id) {
            return Err(ApiError::not_found(id));
        }
        let session = Arc::new(Mutex::new(self.store.load(id)?));
        sessions.insert(id.to_string(), Arc::clone(&session));
        Ok(session)
    }

    /// Runs `f` under the session's writer lock with a journal that makes
    /// every event durable before `f` returns.
    fn mutate<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session, &dyn Clock, &mut visbench::session::FileJournal) -> visbench::Result<T>,
    ) -> ApiResult<T> {
        let session = self.session(id)?;
        let mut session = session.lock().expect("session poisoned");
        let mut journal = self.store.journal(id)?;
        Ok(f(&mut session, self.clock.as_ref(), &mut journal)?)
    }

    fn read<T>(&self, id: &str, f: impl FnOnce(&Session) -> ApiResult<T>) -> ApiResult<T> {
        let session = self.session(id)?;
        let session = session.lock().expect("session poisoned");
        f(&session)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> visbench::Error {
    visbench::Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn load_idempotency(path: &Path) -> visbench::Result<HashMap<String, IdempotencyRecord>> {
    let mut out = HashMap::new();
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(io_error(path, e)),
    };
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| io_error(path, e))?;
        // A torn final line means the create it belonged to was never acknowledged.
        if let Ok(r) = serde_json::from_str::<IdempotencyRecord>(&line) {
            out.insert(r.key.clone(), r);
        }
    }
    Ok(out)
}

fn valid_session_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= MAX_SESSION_ID_LEN
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    let value: Value = serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_json", e.to_string()))?;
    check_schema_version(&value)?;
    serde_json::from_value(value).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_body", e.to_string()))
}

fn check_schema_version(value: &Value) -> ApiResult<()> {
    match value.get("schema_version").and_then(Value::as_u64) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => Ok(()),
        Some(v) => Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "unsupported_schema_version",
            format!("schema_version {v} is not supported; this server speaks {SCHEMA_VERSION}"),
        )),
        None => {
            let mut e = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", "schema_version is required");
            e.fields.push("schema_version".into());
            Err(e)
        }
    }
}

fn validate_create(req: &CreateSessionRequest) -> ApiResult<()> {
    let mut fields = Vec::new();
    if let Some(id) = &req.session_id {
        if !valid_session_id(id) {
            fields.push("session_id".to_string());
        }
    }
    if req.participant_id.as_deref().is_some_and(|p| p.trim().is_empty()) {
        fields.push("participant_id".into());
    }
    if req.conditions.is_empty() {
        fields.push("conditions".into());
    }
    for (i, c) in req.conditions.iter().enumerate() {
        if c.device_label.trim().is_empty() {
            fields.push(format!("conditions[{i}].device_label"));
        }
        if c.light_level.label.trim().is_empty() {
            fields.push(format!("conditions[{i}].light_level.label"));
        }
        let lux = c.light_level.illuminance_lux;
        if !(lux > 0.0 && lux.is_finite()) {
            fields.push(format!("conditions[{i}].light_level.illuminance_lux"));
        }
    }
    if fields.is_empty() {
        return Ok(());
    }
    let mut e = ApiError::new(
        StatusCode::UNPROCESSABLE_ENTITY,
        "validation_failed",
        format!("invalid fields: {}", fields.join(", ")),
    );
    e.fields = fields;
    Err(e)
}

fn session_view(session: &Session, clock: &dyn Clock) -> SessionView {
    SessionView {
        schema_version: SCHEMA_VERSION,
        session_id: session.session_id().to_string(),
        status: session.status(),
        plan: session.plan().clone(),
        progress: session.progress(),
        hue_remaining_ms: session.hue_remaining_ms(clock),
    }
}

fn progress_view(id: &str, progress: Progress) -> Json<ProgressView> {
    Json(ProgressView {
        schema_version: SCHEMA_VERSION,
        session_id: id.to_string(),
        progress,
    })
}

async fn console() -> Html<&'static str> {
    Html(CONSOLE_PAGE)
}

async fn health() -> Json<Value> {
    Json(json!({
        "schema_version": SCHEMA_VERSION,
        "status": "ok",
        "artifact_version": visbench::ARTIFACT_VERSION,
    }))
}

async fn calibrations(State(app): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({
        "schema_version": SCHEMA_VERSION,
        "calibrations": app.calibrations.values().collect::<Vec<_>>(),
    }))
}

async fn list_sessions(State(app): State<Arc<AppState>>) -> ApiResult<Json<Value>> {
    Ok(Json(json!({ "schema_version": SCHEMA_VERSION, "sessions": app.store.list()? })))
}

async fn create_session(State(app): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> ApiResult<HttpResponse> {
    let req: CreateSessionRequest = parse(&body)?;
    validate_create(&req)?;
    let key = headers
        .get("idempotency-key")
        .map(|v| v.to_str().map(str::to_string))
        .transpose()
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "invalid_header", "Idempotency-Key must be ASCII"))?;
    let canonical = serde_json::to_value(&req).expect("request serializes");

    // Held for the whole create so that concurrent retries of one key cannot race.
    let mut keys = app.idempotency.lock().expect("idempotency map poisoned");
    if let Some(k) = &key {
        if let Some(prior) = keys.get(k) {
            if prior.request != canonical {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "idempotency_conflict",
                    "Idempotency-Key was already used with a different request",
                ));
            }
            let view = app.read(&prior.session_id, |s| Ok(session_view(s, app.clock.as_ref())))?;
            return Ok((StatusCode::CREATED, [("idempotent-replayed", "true")], Json(view)).into_response());
        }
    }

    let calibration = app.calibrations.get(&req.calibration_id).cloned().ok_or_else(|| {
        let mut e = ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "unknown_calibration",
            format!("no calibration profile {:?}", req.calibration_id),
        );
        e.fields.push("calibration_id".into());
        e.with_details(json!({ "known": app.calibrations.keys().collect::<Vec<_>>() }))
    })?;
    let mut plan = build_plan(req.participant_index, &req.conditions, &TestKind::ALL, req.seed, &calibration.id)?;
    if let Some(p) = &req.participant_id {
        plan.participant_id = p.clone();
    }
    if let Some(ms) = req.hue_min_duration_ms {
        plan.hue_min_duration_ms = ms;
    }
    let id = req.session_id.clone().unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
    if app.store.exists(&id) {
        return Err(ApiError::new(StatusCode::CONFLICT, "session_exists", format!("session {id:?} already exists")));
    }
    let mut journal = app.store.journal(&id)?;
    let session = Session::create(id.clone(), plan, calibration, app.clock.as_ref(), &mut journal)?;
    let view = session_view(&session, app.clock.as_ref());
    app.sessions
        .lock()
        .expect("session map poisoned")
        .insert(id.clone(), Arc::new(Mutex::new(session)));

    if let Some(k) = key {
        let record = IdempotencyRecord {
            key: k.clone(),
            request: canonical,
            session_id: id,
        };
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&app.idempotency_path)
            .map_err(|e| io_error(&app.idempotency_path, e))?;
        let line = serde_json::to_string(&record).expect("record serializes") + "\n";
        file.write_all(line.as_bytes())
            .and_then(|_| file.sync_data())
            .map_err(|e| io_error(&app.idempotency_path, e))?;
        keys.insert(k, record);
    }
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_session(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<SessionView>> {
    app.read(&id, |s| Ok(Json(session_view(s, app.clock.as_ref()))))
}

async fn start(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Json<ProgressView>> {
    parse::<EmptyRequest>(&body)?;
    let progress = app.mutate(&id, |s, clock, journal| s.start(clock, journal))?;
    Ok(progress_view(&id, progress))
}

async fn stimulus(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<StimulusView>> {
    app.read(&id, |s| {
        let conflict = |code: &str, message: &str| {
            ApiError::new(StatusCode::CONFLICT, code, message)
                .with_details(json!({ "status": s.status(), "results": format!("/v1/sessions/{id}/results") }))
        };
        match s.status() {
            SessionStatus::Created => return Err(conflict("not_started", "session has not been started")),
            SessionStatus::Suspended => return Err(conflict("suspended", "session is suspended")),
            SessionStatus::Complete => return Err(conflict("session_complete", "all tests are finished; fetch results")),
            SessionStatus::Running if s.awaiting_rest() => {
                return Err(conflict("rest_required", "the previous condition finished; acknowledge the rest period"))
            }
            SessionStatus::Running => {}
        }
        Ok(Json(StimulusView {
            schema_version: SCHEMA_VERSION,
            session_id: id.clone(),
            stimulus: s.next_stimulus()?,
            hue_remaining_ms: s.hue_remaining_ms(app.clock.as_ref()),
        }))
    })
}

async fn submit(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Json<AckView>> {
    let req: SubmitRequest = parse(&body)?;
    let ack = app.mutate(&id, |s, clock, journal| s.submit(req.seq, req.response, clock, journal))?;
    Ok(Json(AckView {
        schema_version: SCHEMA_VERSION,
        session_id: id,
        ack,
    }))
}

async fn rest_ack(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Json<ProgressView>> {
    parse::<EmptyRequest>(&body)?;
    let progress = app.mutate(&id, |s, clock, journal| s.acknowledge_rest(clock, journal))?;
    Ok(progress_view(&id, progress))
}

async fn suspend(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Json<ProgressView>> {
    let req: SuspendRequest = parse(&body)?;
    let progress = app.mutate(&id, |s, clock, journal| s.suspend(req.reason, clock, journal))?;
    Ok(progress_view(&id, progress))
}

async fn resume(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Json<ProgressView>> {
    parse::<EmptyRequest>(&body)?;
    let progress = app.mutate(&id, |s, clock, journal| s.resume(clock, journal))?;
    Ok(progress_view(&id, progress))
}

async fn results(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<ResultsView>> {
    app.read(&id, |s| {
        let result = s.result();
        Ok(Json(ResultsView {
            schema_version: SCHEMA_VERSION,
            session_id: id.clone(),
            empty: result.is_empty(),
            result,
        }))
    })
}

async fn document(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    app.read(&id, |s| {
        Ok(Json(json!({
            "schema_version": SCHEMA_VERSION,
            "document": SessionDocument::from_session(s),
        })))
    })
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/", get(console))
        .route("/v1/health", get(health))
        .route("/v1/calibrations", get(calibrations))
        .route("/v1/sessions", get(list_sessions).post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/start", post(start))
        .route("/v1/sessions/{id}/stimulus", get(stimulus))
        .route("/v1/sessions/{id}/responses", post(submit))
        .route("/v1/sessions/{id}/rest-ack", post(rest_ack))
        .route("/v1/sessions/{id}/suspend", post(suspend))
        .route("/v1/sessions/{id}/resume", post(resume))
        .route("/v1/sessions/{id}/results", get(results))
        .route("/v1/sessions/{id}/document", get(document))
        .fallback(fallback)
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("{}", json!({ "event": "listening", "addr": listener.local_addr()?.to_string() }));
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
