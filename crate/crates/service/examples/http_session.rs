// Drives the acuity test of one session through the HTTP API in-process,
// answering as a simulated participant whose threshold is 0.2 logMAR.
//
//     cargo run -p visbench-service --example http_session

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use visbench::observer::{Observer, ObserverModel};
use visbench::session::ManualClock;
use visbench_service::api::{router, AppState, ServiceConfig};

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> Value {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    serde_json::from_slice(&bytes).unwrap()
}

#[tokio::main]
async fn main() {
    let dir = std::env::temp_dir().join(format!("visbench-http-{}", std::process::id()));
    let clock = Arc::new(ManualClock::new(0, 1_700_000_000_000));
    let state = AppState::open(ServiceConfig {
        data_dir: dir.clone(),
        calibrations: Vec::new(),
        clock: clock.clone(),
    })
    .unwrap();
    let app = router(state);

    let created = call(
        &app,
        "POST",
        "/v1/sessions",
        Some(json!({
            "schema_version": 1,
            "participant_index": 0,
            "conditions": [{ "device_label": "headset", "light_level": { "label": "normal", "illuminance_lux": 572.0 } }],
            "seed": 1,
            "calibration_id": "reference"
        })),
    )
    .await;
    let id = created["session_id"].as_str().unwrap().to_string();
    println!("session {id}, test order {}", created["plan"]["test_order"]);
    call(&app, "POST", &format!("/v1/sessions/{id}/start"), Some(json!({ "schema_version": 1 }))).await;

    let mut participant = Observer::new(ObserverModel::step(0.2), 1).unwrap();
    loop {
        let stim = call(&app, "GET", &format!("/v1/sessions/{id}/stimulus"), None).await;
        let s = &stim["stimulus"];
        let level = s["level_logmar"].as_f64().unwrap();
        let correct = participant.respond(level);
        clock.advance(2_000);
        let ack = call(
            &app,
            "POST",
            &format!("/v1/sessions/{id}/responses"),
            Some(json!({ "schema_version": 1, "seq": s["seq"], "response": { "type": "judged", "correct": correct } })),
        )
        .await;
        if ack["ack"]["test_completed"] == true {
            break;
        }
    }
    let results = call(&app, "GET", &format!("/v1/sessions/{id}/results"), None).await;
    let acuity = &results["result"]["conditions"][0]["acuity"];
    println!(
        "acuity {:.4} logMAR ({}) after {} trials",
        acuity["result"]["logmar"].as_f64().unwrap(),
        acuity["band"],
        acuity["trials"]
    );
    std::fs::remove_dir_all(dir).ok();
}
