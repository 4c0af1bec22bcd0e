#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use visbench::session::ManualClock;
use visbench_service::api::{router, AppState, ServiceConfig};

pub const WALL_ORIGIN_MS: u64 = 1_700_000_000_000;

pub fn app(dir: &Path, clock: Arc<ManualClock>) -> Router {
    let state = AppState::open(ServiceConfig {
        data_dir: dir.to_path_buf(),
        calibrations: Vec::new(),
        clock,
    })
    .unwrap();
    router(state)
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    call_with(app, method, uri, body, &[]).await
}

pub async fn call_with(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<Value>,
    headers: &[(&str, &str)],
) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    for (k, v) in headers {
        req = req.header(*k, *v);
    }
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or_else(|_| json!({ "raw": String::from_utf8_lossy(&bytes) }));
    (status, value)
}

pub fn create_body(participant_index: u32, seed: u64) -> Value {
    json!({
        "schema_version": 1,
        "participant_index": participant_index,
        "conditions": [
            { "device_label": "naked-eyes", "light_level": { "label": "normal", "illuminance_lux": 572.0 } },
            { "device_label": "headset", "light_level": { "label": "normal", "illuminance_lux": 572.0 } }
        ],
        "seed": seed,
        "calibration_id": "reference"
    })
}

pub fn empty() -> Option<Value> {
    Some(json!({ "schema_version": 1 }))
}
