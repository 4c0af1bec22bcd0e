use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use visbench::calibration::CalibrationProfile;
use visbench::stats::analysis::{read_results_csv, METRIC_LOGMAR};
use visbench::stats::BenchmarkReport;

fn visbench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_visbench"))
        .args(args)
        .current_dir(cwd)
        .env_remove("VISBENCH_DATA_DIR")
        .output()
        .unwrap()
}

fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.trim_end().lines().count(), 1, "{text}");
    serde_json::from_str(text.trim()).unwrap()
}

#[test]
fn simulate_step_observer_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = visbench(
        &["simulate", "--observers", "step:0.3", "--sessions", "100", "--seed", "7", "--output", "sim"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_results_csv(std::fs::File::open(dir.path().join("sim/results.csv")).unwrap()).unwrap();
    let logmar: Vec<f64> = rows.iter().filter(|r| r.metric == METRIC_LOGMAR).map(|r| r.value).collect();
    assert_eq!(logmar.len(), 100);
    assert!(logmar.iter().all(|v| (v - 0.3).abs() <= 0.02));
    assert!(dir.path().join("sim/trials.csv").exists());
}

#[test]
fn analyze_null_dataset_finds_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let sim = visbench(
        &["simulate", "--observers", "step:0.2,step:0.2,step:0.2", "--sessions", "12", "--seed", "3", "--output", "null"],
        dir.path(),
    );
    assert!(sim.status.success());
    let out = visbench(&["analyze", "--input", "null/results.csv", "--output", "report"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: BenchmarkReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report/report.json")).unwrap()).unwrap();
    assert!(!report.pairwise.is_empty());
    assert!(report.pairwise.iter().all(|r| !r.significant));
    assert!(report.friedman.iter().all(|r| !r.significant));
    assert!(dir.path().join("report/plots.json").exists());
    assert!(String::from_utf8(out.stdout).unwrap().contains("## Friedman tests"));
}

#[test]
fn benchmark_pipeline_flags_worst_device() {
    let dir = tempfile::tempdir().unwrap();
    assert!(visbench(&["simulate", "--seed", "2024", "--output", "bench"], dir.path()).status.success());
    let out = visbench(&["analyze", "--input", "bench/results.csv", "--format", "json"], dir.path());
    assert!(out.status.success());
    let report: BenchmarkReport = serde_json::from_slice(&out.stdout).unwrap();
    let worst: Vec<_> = report
        .pairwise
        .iter()
        .filter(|r| r.condition_a == "worst-headset" || r.condition_b == "worst-headset")
        .collect();
    assert_eq!(worst.len(), 18);
    assert!(worst.iter().all(|r| r.p_adjusted.unwrap() < 0.01));
}

#[test]
fn calibrate_recovers_cubic() {
    let dir = tempfile::tempdir().unwrap();
    let mut samples = String::from("grayscale luminance\n");
    for i in 0..=10 {
        let g = f64::from(i) / 10.0;
        samples += &format!("{g} {}\n", 0.4 + 3.0 * g - 1.5 * g * g + 120.0 * g * g * g);
    }
    std::fs::write(dir.path().join("cubic.txt"), samples).unwrap();
    let out = visbench(
        &["calibrate", "--input", "cubic.txt", "--degree", "3", "--id", "bench-monitor", "--output", "profile.json"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let profile = CalibrationProfile::load(&dir.path().join("profile.json")).unwrap();
    assert_eq!(profile.id, "bench-monitor");
    for (got, want) in profile.curve.coefficients.iter().zip([0.4, 3.0, -1.5, 120.0]) {
        assert!((got - want).abs() < 1e-6, "{:?}", profile.curve.coefficients);
    }
}

#[test]
fn errors_are_single_json_lines_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = visbench(&["simulate", "--observers", "wobbly:1", "--output", "x"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error(&out)["error"]["code"], "usage");

    let out = visbench(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    stderr_error(&out);

    let out = visbench(&["analyze", "--input", "missing.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"]["code"], "io");

    std::fs::write(dir.path().join("flat.txt"), "0 5\n1 5\n").unwrap();
    let out = visbench(&["calibrate", "--input", "flat.txt", "--degree", "3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    stderr_error(&out);

    let out = visbench(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn export_round_trips_trial_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert!(visbench(&["simulate", "--observers", "step:0.1", "--sessions", "2", "--output", "s"], dir.path())
        .status
        .success());
    assert!(visbench(&["export", "--input", "s/trials.csv", "--output", "log.json"], dir.path()).status.success());
    assert!(visbench(&["export", "--input", "log.json", "--output", "back.csv"], dir.path()).status.success());
    let a = std::fs::read(dir.path().join("s/trials.csv")).unwrap();
    let b = std::fs::read(dir.path().join("back.csv")).unwrap();
    assert_eq!(a, b);
    let out = visbench(&["export", "--input", "log.json", "--output", "what.txt"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

fn http(addr: &str, method: &str, path: &str, body: &str) -> (u16, Value) {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = String::new();
    stream.read_to_string(&mut raw).unwrap();
    let status = raw[9..12].parse().unwrap();
    let (_, payload) = raw.split_once("\r\n\r\n").unwrap();
    (status, serde_json::from_str(payload).unwrap_or(Value::Null))
}

#[test]
fn serve_persists_sessions_that_export_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let mut child = Command::new(env!("CARGO_BIN_EXE_visbench"))
        .args(["serve", "--port", "0"])
        .env("VISBENCH_DATA_DIR", &data)
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let listening: Value = serde_json::from_str(&line).unwrap();
    let addr = listening["addr"].as_str().unwrap().to_string();

    let (status, health) = http(&addr, "GET", "/v1/health", "");
    assert_eq!(status, 200);
    assert_eq!(health["status"], "ok");
    let create = r#"{"schema_version":1,"session_id":"cli-1","participant_index":0,"seed":4,"calibration_id":"reference",
        "conditions":[{"device_label":"naked-eyes","light_level":{"label":"normal","illuminance_lux":572}}]}"#;
    let (status, _) = http(&addr, "POST", "/v1/sessions", create);
    assert_eq!(status, 201);
    assert_eq!(http(&addr, "POST", "/v1/sessions/cli-1/start", r#"{"schema_version":1}"#).0, 200);
    let submit = r#"{"schema_version":1,"seq":1,"response":{"type":"judged","correct":true}}"#;
    assert_eq!(http(&addr, "POST", "/v1/sessions/cli-1/responses", submit).0, 200);
    child.kill().unwrap();
    child.wait().unwrap();

    let out = Command::new(env!("CARGO_BIN_EXE_visbench"))
        .args(["export", "--session", "cli-1", "--output", "cli-1.csv"])
        .env("VISBENCH_DATA_DIR", &data)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("cli-1.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
    let doc = Command::new(env!("CARGO_BIN_EXE_visbench"))
        .args(["export", "--session", "cli-1", "--output", "cli-1.json"])
        .env("VISBENCH_DATA_DIR", &data)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(doc.status.success());
    let text = std::fs::read_to_string(dir.path().join("cli-1.json")).unwrap();
    visbench::session::SessionDocument::from_json(&text).unwrap();
}
