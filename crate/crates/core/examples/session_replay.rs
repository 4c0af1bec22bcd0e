// Runs one simulated participant through a persisted session, interrupts
// it halfway, reloads it from disk and finishes it.
//
//     cargo run -p visbench --example session_replay

use std::collections::BTreeMap;

use visbench::calibration::CalibrationProfile;
use visbench::observer::{HueObserver, Observer, ObserverModel};
use visbench::session::{
    build_plan, run_session, run_test, Condition, FileStore, LightLevel, ManualClock, Session, SessionDocument,
    SimulatedDevice, SimulatedSource, TestKind,
};

fn main() {
    let dir = std::env::temp_dir().join(format!("visbench-replay-{}", std::process::id()));
    let store = FileStore::open(&dir).unwrap();
    let conditions = vec![
        Condition::new("naked-eyes", LightLevel::normal()).unwrap(),
        Condition::new("headset", LightLevel::normal()).unwrap(),
    ];
    let plan = build_plan(0, &conditions, &TestKind::ALL, 7, "reference").unwrap();
    let device = |acuity: f64, contrast: f64, hue: f64| SimulatedDevice {
        acuity: Observer::new(ObserverModel::step(acuity), 1).unwrap(),
        contrast: Observer::new(ObserverModel::step(contrast), 2).unwrap(),
        hue: HueObserver::new(hue, 3).unwrap(),
    };
    let devices = BTreeMap::from([
        ("naked-eyes".to_string(), device(0.0, 0.03, 0.5)),
        ("headset".to_string(), device(0.3, 0.1, 2.0)),
    ]);
    let mut source = SimulatedSource::new(devices, 3_000, 360_000);
    let clock = ManualClock::new(0, 1_700_000_000_000);

    let mut journal = store.journal("demo").unwrap();
    let mut session = Session::create("demo", plan, CalibrationProfile::reference(), &clock, &mut journal).unwrap();
    session.start(&clock, &mut journal).unwrap();
    for _ in 0..2 {
        let fragment = run_test(&mut session, &mut source, &clock, &mut journal).unwrap();
        println!("finished {} on condition {}", fragment.test, fragment.condition_index);
    }
    println!("{} events on disk, dropping the in-memory session", session.events().len());
    drop(session);

    let mut session = store.load("demo").unwrap();
    println!("reloaded at {:?}", session.progress());
    let mut journal = store.journal("demo").unwrap();
    let result = run_session(&mut session, &mut source, &clock, &mut journal).unwrap();
    for row in result.result_rows() {
        println!("  {:<11} {:<7} {:.4}", row.condition, row.metric, row.value);
    }

    let doc = SessionDocument::from_session(&session).to_json().unwrap();
    let back = SessionDocument::from_json(&doc).unwrap();
    println!("document round-trips: {}", back.to_json().unwrap() == doc);
    std::fs::remove_dir_all(dir).ok();
}
