use std::collections::BTreeMap;

use super::*;
use crate::calibration::{optotype_pixel_height, CalibrationProfile};
use crate::metrics::PerceptionBand;
use crate::observer::{HueObserver, Observer, ObserverModel};
use crate::staircase::{StaircaseConfig, StaircaseState};
use crate::Error;

fn conditions(devices: &[&str]) -> Vec<Condition> {
    devices
        .iter()
        .map(|d| Condition::new(*d, LightLevel::normal()).unwrap())
        .collect()
}

fn plan(devices: &[&str], seed: u64) -> SessionPlan {
    build_plan(0, &conditions(devices), &TestKind::ALL, seed, "reference").unwrap()
}

fn new_session(devices: &[&str], seed: u64, clock: &dyn Clock) -> Session {
    Session::create("s1", plan(devices, seed), CalibrationProfile::reference(), clock, &mut InMemory).unwrap()
}

fn simulated(thresholds: &[(&str, f64, f64, f64)], seed: u64) -> SimulatedSource {
    let devices = thresholds
        .iter()
        .enumerate()
        .map(|(i, (label, acuity, contrast, hue_sd))| {
            let s = seed.wrapping_mul(31).wrapping_add(i as u64);
            (
                label.to_string(),
                SimulatedDevice {
                    acuity: Observer::new(ObserverModel::step(*acuity), s).unwrap(),
                    contrast: Observer::new(ObserverModel::step(*contrast), s + 1000).unwrap(),
                    hue: HueObserver::new(*hue_sd, s + 2000).unwrap(),
                },
            )
        })
        .collect::<BTreeMap<_, _>>();
    SimulatedSource::new(devices, 2_000, 300_000)
}

#[test]
fn simulated_session_runs_to_completion() {
    let clock = ManualClock::new(0, 1_700_000_000_000);
    let mut s = new_session(&["naked-eyes", "headset"], 11, &clock);
    let mut src = simulated(&[("naked-eyes", 0.0, 0.05, 0.5), ("headset", 0.3, 0.2, 2.0)], 11);
    let result = run_session(&mut s, &mut src, &clock, &mut InMemory).unwrap();
    assert_eq!(result.status, SessionStatus::Complete);
    assert_eq!(result.completed_tests, 6);
    for c in &result.conditions {
        let acuity = c.acuity.as_ref().unwrap();
        let want = if c.condition.device_label == "headset" { 0.3 } else { 0.0 };
        assert!((acuity.result.logmar - want).abs() <= 0.02, "{acuity:?}");
        assert!((40..=120).contains(&acuity.trials));
        let contrast = c.contrast.as_ref().unwrap();
        let want = if c.condition.device_label == "headset" { 0.2 } else { 0.05 };
        assert!((contrast.terminal_level - want).abs() <= 0.001);
        assert!(contrast.result.log_cs > 0.0);
        let hue = c.hue.as_ref().unwrap();
        assert!(hue.duration_ms >= DEFAULT_HUE_MIN_DURATION_MS);
        assert!(c.duration_ms.unwrap() > 0);
    }
    let headset = result.conditions.iter().find(|c| c.condition.device_label == "headset").unwrap();
    assert_eq!(headset.acuity.as_ref().unwrap().band, PerceptionBand::AcuityBelowNormal);
    let times: Vec<u64> = s.trials().iter().map(|t| t.monotonic_ms).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
    let seqs: Vec<u64> = s.trials().iter().map(|t| t.seq).collect();
    assert_eq!(seqs, (1..=seqs.len() as u64).collect::<Vec<_>>());
}

#[test]
fn stimulus_is_stable_until_answered() {
    let clock = ManualClock::new(0, 0);
    let mut s = new_session(&["a"], 3, &clock);
    assert!(s.next_stimulus().is_err());
    s.start(&clock, &mut InMemory).unwrap();
    let first = s.next_stimulus().unwrap();
    assert_eq!(first, s.next_stimulus().unwrap());
    assert_eq!(first.seq, 1);
    let StimulusBody::Acuity { level_logmar, pixel_height, .. } = first.body else {
        panic!("acuity comes first for participant 0")
    };
    assert_eq!(level_logmar, 1.0);
    let geometry = &CalibrationProfile::reference().geometry;
    assert!((pixel_height - optotype_pixel_height(1.0, geometry).unwrap()).abs() < 1e-9);
    s.submit(1, Response::Judged { correct: true }, &clock, &mut InMemory).unwrap();
    assert_eq!(s.next_stimulus().unwrap().seq, 2);
}

#[test]
fn sequence_conflicts_and_duplicates() {
    let clock = ManualClock::new(0, 0);
    let mut s = new_session(&["a"], 3, &clock);
    s.start(&clock, &mut InMemory).unwrap();
    let ok = Response::Judged { correct: true };
    assert!(matches!(
        s.submit(2, ok.clone(), &clock, &mut InMemory),
        Err(Error::Sequence { expected: 1, got: 2 })
    ));
    let first = s.submit(1, ok.clone(), &clock, &mut InMemory).unwrap();
    assert!(!first.duplicate);
    let again = s.submit(1, ok.clone(), &clock, &mut InMemory).unwrap();
    assert!(again.duplicate);
    assert_eq!(s.trials().len(), 1);
    assert_eq!(s.staircase().unwrap().consecutive_correct(), 1);
    assert!(matches!(
        s.submit(1, Response::Judged { correct: false }, &clock, &mut InMemory),
        Err(Error::Sequence { .. })
    ));
    assert!(matches!(
        s.submit(2, Response::HueSubmit {}, &clock, &mut InMemory),
        Err(Error::Domain(_))
    ));
    assert_eq!(s.events().len(), 3);
}

#[test]
fn judged_responses_match_library_staircase() {
    let clock = ManualClock::new(0, 0);
    let mut s = new_session(&["a"], 5, &clock);
    s.start(&clock, &mut InMemory).unwrap();
    let mut lib = StaircaseState::start(StaircaseConfig::acuity()).unwrap();
    let mut seq = 1;
    while !lib.is_terminated() {
        // A threshold rule with an occasional miss above threshold.
        let correct = lib.current_level() > 0.27 && seq % 13 != 12;
        clock.advance(1500);
        lib = lib.submit_response_at(correct, clock.monotonic_ms()).unwrap();
        s.submit(seq, Response::Judged { correct }, &clock, &mut InMemory).unwrap();
        if !lib.is_terminated() {
            assert_eq!(s.staircase().unwrap(), &lib);
        }
        seq += 1;
    }
    let acuity = s.result().conditions[0].acuity.clone().unwrap();
    assert_eq!(acuity.result.logmar, lib.threshold_estimate().unwrap());
    assert_eq!(acuity.trials, lib.trial_count());
}

#[test]
fn orientation_and_letter_answers_are_scored() {
    let clock = ManualClock::new(0, 0);
    let mut s = new_session(&["a"], 8, &clock);
    s.start(&clock, &mut InMemory).unwrap();
    let stim = s.next_stimulus().unwrap();
    let StimulusBody::Acuity { orientation, .. } = stim.body else { panic!() };
    let wrong = Orientation::ALL.into_iter().find(|o| *o != orientation).unwrap();
    let ack = s.submit(1, Response::Orientation { orientation }, &clock, &mut InMemory).unwrap();
    assert_eq!(ack.correct, Some(true));
    let ack = s.submit(2, Response::Orientation { orientation: wrong }, &clock, &mut InMemory).unwrap();
    assert_eq!(ack.correct, Some(false));
}

/// Walks a one-condition session to its hue test with scripted answers.
fn session_at_hue(clock: &ManualClock) -> Session {
    let mut p = plan(&["a"], 21);
    p.test_order = vec![TestKind::Hue, TestKind::Acuity, TestKind::Contrast];
    let mut s = Session::create("hue", p, CalibrationProfile::reference(), clock, &mut InMemory).unwrap();
    s.start(clock, &mut InMemory).unwrap();
    s
}

#[test]
fn hue_gate_reports_remaining_time() {
    let clock = ManualClock::new(1_000, 0);
    let mut s = session_at_hue(&clock);
    clock.advance(400_000);
    assert_eq!(s.hue_remaining_ms(&clock), Some(80_000));
    let err = s.submit(1, Response::HueSubmit {}, &clock, &mut InMemory).unwrap_err();
    assert!(matches!(err, Error::HueGate { remaining_ms: 80_000 }));
    clock.advance(79_000);
    assert!(matches!(
        s.submit(1, Response::HueSubmit {}, &clock, &mut InMemory),
        Err(Error::HueGate { remaining_ms: 1_000 })
    ));
    assert!(s.trials().is_empty());
    s.submit(1, Response::HueMove { group: 1, from: 1, to: 3 }, &clock, &mut InMemory).unwrap();
    assert!(matches!(
        s.submit(2, Response::HueMove { group: 1, from: 0, to: 3 }, &clock, &mut InMemory),
        Err(Error::Position(_))
    ));
    clock.advance(1_000);
    let ack = s.submit(2, Response::HueSubmit {}, &clock, &mut InMemory).unwrap();
    assert!(ack.test_completed);
    let hue = s.result().conditions[0].hue.clone().unwrap();
    assert_eq!(hue.commands, 2);
    assert_eq!(hue.duration_ms, 480_000);
}

#[test]
fn sorted_board_scores_zero() {
    let clock = ManualClock::new(0, 0);
    let mut s = session_at_hue(&clock);
    let groups = crate::hue::CapSet::standard().identity_arrangement().groups().to_vec();
    s.submit(1, Response::HueArrange { groups }, &clock, &mut InMemory).unwrap();
    clock.advance(DEFAULT_HUE_MIN_DURATION_MS);
    s.submit(2, Response::HueSubmit {}, &clock, &mut InMemory).unwrap();
    let hue = s.result().conditions[0].hue.clone().unwrap();
    assert_eq!(hue.report.total, 0);
    assert_eq!(hue.band, PerceptionBand::TesSuperior);
}

#[test]
fn rest_is_acknowledged_between_conditions() {
    let clock = ManualClock::new(0, 0);
    let mut s = new_session(&["a", "b"], 2, &clock);
    let mut src = simulated(&[("a", 0.1, 0.1, 1.0), ("b", 0.2, 0.2, 1.0)], 2);
    s.start(&clock, &mut InMemory).unwrap();
    for _ in 0..3 {
        run_test(&mut s, &mut src, &clock, &mut InMemory).unwrap();
    }
    assert!(s.awaiting_rest());
    assert!(s.next_stimulus().is_err());
    assert!(run_test(&mut s, &mut src, &clock, &mut InMemory).is_err());
    s.acknowledge_rest(&clock, &mut InMemory).unwrap();
    assert!(s.acknowledge_rest(&clock, &mut InMemory).is_err());
    let frag = run_test(&mut s, &mut src, &clock, &mut InMemory).unwrap();
    assert_eq!(frag.condition_index, 1);
    assert!(frag.result.completed(frag.test));
}

#[test]
fn state_transitions_are_enforced() {
    let clock = ManualClock::new(0, 0);
    let mut s = new_session(&["a"], 1, &clock);
    assert!(s.resume(&clock, &mut InMemory).is_err());
    assert!(s.suspend("x", &clock, &mut InMemory).is_err());
    s.start(&clock, &mut InMemory).unwrap();
    assert!(s.start(&clock, &mut InMemory).is_err());
    s.suspend("break", &clock, &mut InMemory).unwrap();
    assert_eq!(s.status(), SessionStatus::Suspended);
    assert!(s.next_stimulus().is_err());
    assert!(s.submit(1, Response::Judged { correct: true }, &clock, &mut InMemory).is_err());
    let partial = s.result();
    assert_eq!(partial.status, SessionStatus::Suspended);
    assert!(partial.is_empty());
    s.resume(&clock, &mut InMemory).unwrap();
    assert_eq!(s.status(), SessionStatus::Running);
}

#[test]
fn plan_must_match_calibration() {
    let clock = ManualClock::new(0, 0);
    let mut p = plan(&["a"], 1);
    p.calibration_id = "other".into();
    assert!(Session::create("s", p, CalibrationProfile::reference(), &clock, &mut InMemory).is_err());
}

fn full_run(seed: u64) -> (Session, ManualClock) {
    let clock = ManualClock::new(0, 1_000);
    let mut s = new_session(&["a", "b"], seed, &clock);
    let mut src = simulated(&[("a", 0.1, 0.1, 1.0), ("b", 0.25, 0.3, 2.0)], seed);
    run_session(&mut s, &mut src, &clock, &mut InMemory).unwrap();
    (s, clock)
}

#[test]
fn scripted_replay_reproduces_result() {
    let (recorded, _) = full_run(4);
    let clock = ManualClock::new(0, 1_000);
    let mut s = new_session(&["a", "b"], 4, &clock);
    let start_ms = recorded.events()[1].monotonic_ms;
    clock.set(start_ms);
    s.start(&clock, &mut InMemory).unwrap();
    let mut script = ScriptedSource::from_trials(recorded.trials(), start_ms);
    run_session(&mut s, &mut script, &clock, &mut InMemory).unwrap();
    assert_eq!(s.result(), recorded.result());
    assert_eq!(s.trials(), recorded.trials());
}

#[test]
fn disconnect_suspends_and_resume_completes_identically() {
    let (recorded, _) = full_run(6);
    let responses: Vec<Response> = recorded.trials().iter().map(|t| t.response.clone()).collect();
    let (head, tail) = responses.split_at(responses.len() / 2);

    let clock = ManualClock::new(0, 1_000);
    let mut s = new_session(&["a", "b"], 6, &clock);
    let mut part = ScriptedSource::with_delay(head.to_vec(), 500_000);
    assert!(matches!(
        run_session(&mut s, &mut part, &clock, &mut InMemory),
        Err(Error::Disconnected)
    ));
    assert_eq!(s.status(), SessionStatus::Suspended);
    let mut rest = ScriptedSource::with_delay(tail.to_vec(), 500_000);
    let result = run_session(&mut s, &mut rest, &clock, &mut InMemory).unwrap();
    for (got, want) in result.conditions.iter().zip(&recorded.result().conditions) {
        assert_eq!(got.acuity.as_ref().unwrap().result, want.acuity.as_ref().unwrap().result);
        assert_eq!(got.contrast.as_ref().unwrap().result, want.contrast.as_ref().unwrap().result);
        assert_eq!(got.hue.as_ref().unwrap().report, want.hue.as_ref().unwrap().report);
    }
}

#[test]
fn file_store_survives_crash_at_every_point() {
    let (reference, _) = full_run(9);
    let responses: Vec<Response> = reference.trials().iter().map(|t| t.response.clone()).collect();
    let dir = tempfile::tempdir().unwrap();
    let store = FileStore::open(dir.path()).unwrap();
    for crash_after in [0usize, 1, 7, 40, responses.len() - 1] {
        let id = format!("crash-{crash_after}");
        let clock = ManualClock::new(0, 1_000);
        let mut journal = store.journal(&id).unwrap();
        let mut s = Session::create(&id, plan(&["a", "b"], 9), CalibrationProfile::reference(), &clock, &mut journal).unwrap();
        let mut head = ScriptedSource::with_delay(responses[..crash_after].to_vec(), 500_000);
        let _ = run_session(&mut s, &mut head, &clock, &mut journal);
        drop(s);

        let mut s = store.load(&id).unwrap();
        let mut tail = ScriptedSource::with_delay(responses[crash_after..].to_vec(), 500_000);
        let result = run_session(&mut s, &mut tail, &clock, &mut journal).unwrap();
        let want = reference.result();
        for (got, want) in result.conditions.iter().zip(&want.conditions) {
            assert_eq!(got.acuity.as_ref().unwrap().result, want.acuity.as_ref().unwrap().result);
            assert_eq!(got.contrast.as_ref().unwrap().result, want.contrast.as_ref().unwrap().result);
            assert_eq!(got.hue.as_ref().unwrap().report, want.hue.as_ref().unwrap().report);
        }
        let reloaded = store.load(&id).unwrap();
        assert_eq!(reloaded, s);
    }
    assert_eq!(store.list().unwrap().len(), 5);
    assert!(store.journal("../escape").is_err());
}

#[test]
fn torn_last_line_is_ignored() {
    let dir = tempfile::tempdir().unwrap();
    let store = FileStore::open(dir.path()).unwrap();
    let clock = ManualClock::new(0, 0);
    let mut journal = store.journal("t").unwrap();
    let mut s = Session::create("t", plan(&["a"], 1), CalibrationProfile::reference(), &clock, &mut journal).unwrap();
    s.start(&clock, &mut journal).unwrap();
    let path = dir.path().join("t").join("events.jsonl");
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("{\"index\":2,\"monot");
    std::fs::write(&path, text).unwrap();
    assert_eq!(store.load("t").unwrap(), s);
}

#[test]
fn document_round_trip_is_byte_identical() {
    let (s, _) = full_run(12);
    let doc = SessionDocument::from_session(&s);
    let text = doc.to_json().unwrap();
    let back = SessionDocument::from_json(&text).unwrap();
    assert_eq!(back.to_json().unwrap(), text);
    assert_eq!(back.to_session().unwrap(), s);

    let mut tampered: SessionDocument = serde_json::from_str(&text).unwrap();
    tampered.result.completed_tests = 1;
    assert!(SessionDocument::from_json(&tampered.to_json().unwrap()).is_err());
}

#[test]
fn trial_table_has_one_row_per_trial_and_round_trips() {
    let (s, _) = full_run(13);
    let mut buf = Vec::new();
    write_trials_csv(&mut buf, s.trials()).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().count(), s.trials().len() + 1);
    assert!(text.starts_with(
        "format_version,session_id,participant_id,seq,condition_index,device_label,light_label,illuminance_lux,test,level,correct,monotonic_ms,wall_ms,stimulus_json,response_json\n"
    ));
    assert_eq!(read_trials_csv(buf.as_slice()).unwrap(), s.trials());
}

#[test]
fn result_rows_cover_every_metric() {
    let (s, _) = full_run(14);
    let rows = s.result().result_rows();
    assert_eq!(rows.len(), 2 * 3);
    assert!(rows.iter().all(|r| r.participant == "P001" && r.light_level == "normal"));
}
