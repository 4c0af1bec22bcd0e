use serde::{Deserialize, Serialize};

use super::clock::Clock;
use super::plan::{Condition, SessionPlan, TestKind};
use super::stimulus::{
    acuity_stimulus, contrast_stimulus, hue_stimulus, stimulus_seed, Response, StimulusBody, StimulusDescriptor,
};
use crate::calibration::{grayscale_to_weber, CalibrationProfile};
use crate::hue::{score, shuffle_arrangement, CapSet, HueArrangement, TesReport};
use crate::metrics::{
    classify_acuity, classify_cs, classify_tes, contrast_result_from_threshold, AcuityResult, ContrastResult,
    PerceptionBand,
};
use crate::staircase::{StaircaseConfig, StaircaseState};
use crate::{Error, Result, ARTIFACT_VERSION};

pub const SESSION_FORMAT_VERSION: u32 = 1;

/// A snapshot is offered to the journal every this many events.
pub const SNAPSHOT_EVERY: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Created,
    Running,
    Suspended,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Event {
    Created {
        session_id: String,
        plan: SessionPlan,
        calibration: CalibrationProfile,
        artifact_version: String,
    },
    Started,
    Responded {
        seq: u64,
        response: Response,
    },
    RestAcknowledged,
    Suspended {
        reason: String,
    },
    Resumed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub index: u64,
    /// Milliseconds on the session clock, never decreasing.
    pub monotonic_ms: u64,
    /// Unix epoch milliseconds.
    pub wall_ms: u64,
    pub event: Event,
}

/// Durable sink for committed events. Events are applied in memory only
/// after `append` returns.
pub trait Journal {
    fn append(&mut self, records: &[EventRecord]) -> Result<()>;

    /// Best-effort state checkpoint.
    fn snapshot(&mut self, _snapshot: &Snapshot) -> Result<()> {
        Ok(())
    }
}

/// Journal that keeps nothing beyond the session's own event list.
#[derive(Debug, Default, Clone, Copy)]
pub struct InMemory;

impl Journal for InMemory {
    fn append(&mut self, _records: &[EventRecord]) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub session_id: String,
    pub participant_id: String,
    pub seq: u64,
    pub condition_index: usize,
    pub condition: Condition,
    pub test: TestKind,
    pub stimulus: StimulusDescriptor,
    pub response: Response,
    /// Absent for hue board commands.
    pub correct: Option<bool>,
    pub monotonic_ms: u64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcuityOutcome {
    pub result: AcuityResult,
    pub band: PerceptionBand,
    pub trials: usize,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastOutcome {
    /// Terminal letter darkness.
    pub terminal_level: f64,
    pub grayscale: f64,
    pub weber_contrast: f64,
    pub result: ContrastResult,
    pub band: PerceptionBand,
    pub trials: usize,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HueOutcome {
    pub arrangement: Vec<Vec<u16>>,
    pub report: TesReport,
    pub band: PerceptionBand,
    pub commands: usize,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub condition_index: usize,
    pub condition: Condition,
    pub acuity: Option<AcuityOutcome>,
    pub contrast: Option<ContrastOutcome>,
    pub hue: Option<HueOutcome>,
    /// Time from the condition's first test starting to its last test finishing.
    pub duration_ms: Option<u64>,
}

impl ConditionResult {
    fn empty(condition_index: usize, condition: Condition) -> Self {
        Self {
            condition_index,
            condition,
            acuity: None,
            contrast: None,
            hue: None,
            duration_ms: None,
        }
    }

    pub fn completed(&self, test: TestKind) -> bool {
        match test {
            TestKind::Acuity => self.acuity.is_some(),
            TestKind::Contrast => self.contrast.is_some(),
            TestKind::Hue => self.hue.is_some(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub format_version: u32,
    pub artifact_version: String,
    pub session_id: String,
    pub status: SessionStatus,
    pub plan: SessionPlan,
    pub conditions: Vec<ConditionResult>,
    pub completed_tests: usize,
    pub total_tests: usize,
}

impl SessionResult {
    /// True when no test has finished yet.
    pub fn is_empty(&self) -> bool {
        self.completed_tests == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub status: SessionStatus,
    pub next_seq: u64,
    pub condition_index: Option<usize>,
    pub test: Option<TestKind>,
    pub awaiting_rest: bool,
    pub trials_in_test: usize,
    pub completed_tests: usize,
    pub total_tests: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub seq: u64,
    /// The same submission had already been applied; nothing changed.
    pub duplicate: bool,
    pub correct: Option<bool>,
    pub test_completed: bool,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum LiveTest {
    Staircase(StaircaseState),
    Hue { arrangement: HueArrangement, commands: usize },
}

/// Everything derived from the event stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    session_id: String,
    plan: SessionPlan,
    calibration: CalibrationProfile,
    artifact_version: String,
    status: SessionStatus,
    step: usize,
    live: Option<LiveTest>,
    test_started_ms: u64,
    condition_started_ms: u64,
    awaiting_rest: bool,
    responses: Vec<Response>,
    trials: Vec<TrialRecord>,
    results: Vec<ConditionResult>,
    last_ms: u64,
    event_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format_version: u32,
    pub event_count: u64,
    pub state: SessionState,
}

/// One participant's benchmark session: an append-only event list and the
/// state folded from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    state: SessionState,
    events: Vec<EventRecord>,
}

fn acuity_config(calibration: &CalibrationProfile) -> StaircaseConfig {
    StaircaseConfig {
        hardest_level: calibration.min_renderable_logmar(),
        ..StaircaseConfig::acuity()
    }
}

impl SessionState {
    fn new(session_id: String, plan: SessionPlan, calibration: CalibrationProfile, artifact_version: String, at_ms: u64) -> Result<Self> {
        if session_id.trim().is_empty() {
            return Err(Error::Config("session_id must not be empty".into()));
        }
        plan.validate()?;
        calibration.validate()?;
        if plan.calibration_id != calibration.id {
            return Err(Error::Config(format!(
                "plan references calibration {:?} but {:?} was supplied",
                plan.calibration_id, calibration.id
            )));
        }
        let results = plan
            .conditions
            .iter()
            .enumerate()
            .map(|(i, c)| ConditionResult::empty(i, c.clone()))
            .collect();
        Ok(Self {
            session_id,
            plan,
            calibration,
            artifact_version,
            status: SessionStatus::Created,
            step: 0,
            live: None,
            test_started_ms: at_ms,
            condition_started_ms: at_ms,
            awaiting_rest: false,
            responses: Vec::new(),
            trials: Vec::new(),
            results,
            last_ms: at_ms,
            event_count: 1,
        })
    }

    fn schedule_len(&self) -> usize {
        self.plan.conditions.len() * self.plan.test_order.len()
    }

    fn current(&self) -> Option<(usize, TestKind)> {
        if self.step >= self.schedule_len() {
            return None;
        }
        let per = self.plan.test_order.len();
        Some((self.step / per, self.plan.test_order[self.step % per]))
    }

    fn next_seq(&self) -> u64 {
        self.responses.len() as u64 + 1
    }

    fn begin_test(&mut self, at_ms: u64) -> Result<()> {
        let (cond, test) = self.current().ok_or_else(|| Error::State("no test left to begin".into()))?;
        if self.step.is_multiple_of(self.plan.test_order.len()) {
            self.condition_started_ms = at_ms;
        }
        self.live = Some(match test {
            TestKind::Acuity => LiveTest::Staircase(StaircaseState::start(acuity_config(&self.calibration))?),
            TestKind::Contrast => LiveTest::Staircase(StaircaseState::start(StaircaseConfig::contrast())?),
            TestKind::Hue => LiveTest::Hue {
                arrangement: shuffle_arrangement(&CapSet::standard(), stimulus_seed(self.plan.seed, cond, TestKind::Hue, 0)),
                commands: 0,
            },
        });
        self.test_started_ms = at_ms;
        Ok(())
    }

    fn stimulus(&self) -> Result<StimulusDescriptor> {
        match self.status {
            SessionStatus::Running => {}
            SessionStatus::Complete => return Err(Error::State("session complete; read the results".into())),
            other => return Err(Error::State(format!("session is {other:?}, not running"))),
        }
        if self.awaiting_rest {
            return Err(Error::State("rest period awaiting acknowledgement".into()));
        }
        let (cond, test) = self.current().ok_or_else(|| Error::State("no test pending".into()))?;
        let seq = self.next_seq();
        let seed = stimulus_seed(self.plan.seed, cond, test, seq);
        let body = match self.live.as_ref().ok_or_else(|| Error::State("no live test".into()))? {
            LiveTest::Staircase(s) if test == TestKind::Acuity => acuity_stimulus(seed, &self.calibration, s.current_level())?,
            LiveTest::Staircase(s) => contrast_stimulus(seed, &self.calibration, s.current_level())?,
            LiveTest::Hue { arrangement, .. } => hue_stimulus(&CapSet::standard(), arrangement, self.plan.hue_min_duration_ms),
        };
        Ok(StimulusDescriptor {
            seq,
            condition_index: cond,
            body,
        })
    }

    fn progress(&self) -> Progress {
        let current = if self.status == SessionStatus::Complete { None } else { self.current() };
        Progress {
            status: self.status,
            next_seq: self.next_seq(),
            condition_index: current.map(|c| c.0),
            test: current.map(|c| c.1),
            awaiting_rest: self.awaiting_rest,
            trials_in_test: match &self.live {
                Some(LiveTest::Staircase(s)) => s.trial_count(),
                Some(LiveTest::Hue { commands, .. }) => *commands,
                None => 0,
            },
            completed_tests: self.step,
            total_tests: self.schedule_len(),
        }
    }

    fn result(&self) -> SessionResult {
        SessionResult {
            format_version: SESSION_FORMAT_VERSION,
            artifact_version: self.artifact_version.clone(),
            session_id: self.session_id.clone(),
            status: self.status,
            plan: self.plan.clone(),
            conditions: self.results.clone(),
            completed_tests: self.step,
            total_tests: self.schedule_len(),
        }
    }

    fn apply(&mut self, record: &EventRecord) -> Result<()> {
        let at = record.monotonic_ms;
        if at < self.last_ms {
            return Err(Error::State(format!("event time {at} precedes {}", self.last_ms)));
        }
        if record.index != self.event_count {
            return Err(Error::State(format!(
                "event index {} out of order, expected {}",
                record.index, self.event_count
            )));
        }
        match &record.event {
            Event::Created { .. } => return Err(Error::State("session already created".into())),
            Event::Started => {
                if self.status != SessionStatus::Created {
                    return Err(Error::State(format!("cannot start a {:?} session", self.status)));
                }
                self.status = SessionStatus::Running;
                self.begin_test(at)?;
            }
            Event::Responded { seq, response } => self.respond(*seq, response, record)?,
            Event::RestAcknowledged => {
                if self.status != SessionStatus::Running || !self.awaiting_rest {
                    return Err(Error::State("no rest period to acknowledge".into()));
                }
                self.awaiting_rest = false;
                self.begin_test(at)?;
            }
            Event::Suspended { .. } => {
                if self.status != SessionStatus::Running {
                    return Err(Error::State(format!("cannot suspend a {:?} session", self.status)));
                }
                self.status = SessionStatus::Suspended;
            }
            Event::Resumed => {
                if self.status != SessionStatus::Suspended {
                    return Err(Error::State(format!("cannot resume a {:?} session", self.status)));
                }
                self.status = SessionStatus::Running;
            }
        }
        self.last_ms = at;
        self.event_count += 1;
        Ok(())
    }

    fn respond(&mut self, seq: u64, response: &Response, record: &EventRecord) -> Result<()> {
        let stimulus = self.stimulus()?;
        if seq != stimulus.seq {
            return Err(Error::Sequence {
                expected: stimulus.seq,
                got: seq,
            });
        }
        let at = record.monotonic_ms;
        let (cond, test) = (stimulus.condition_index, stimulus.test());
        let mut finished = false;
        let correct = match self.live.take().expect("stimulus implies a live test") {
            LiveTest::Staircase(s) => {
                let correct = judge(&stimulus.body, response)?;
                let next = s.submit_response_at(correct, at)?;
                if next.is_terminated() {
                    self.finish_staircase(cond, test, &next, at)?;
                    finished = true;
                } else {
                    self.live = Some(LiveTest::Staircase(next));
                }
                Some(correct)
            }
            LiveTest::Hue { arrangement, commands } => {
                let caps = CapSet::standard();
                let next = match response {
                    Response::HueMove { group, from, to } => arrangement.move_cap(*group, *from, *to)?,
                    Response::HueArrange { groups } => HueArrangement::from_groups(&caps, groups.clone())?,
                    Response::HueSubmit {} => {
                        let elapsed = at - self.test_started_ms;
                        if elapsed < self.plan.hue_min_duration_ms {
                            return Err(Error::HueGate {
                                remaining_ms: self.plan.hue_min_duration_ms - elapsed,
                            });
                        }
                        let report = score(&arrangement);
                        self.results[cond].hue = Some(HueOutcome {
                            arrangement: arrangement.groups().to_vec(),
                            band: classify_tes(report.total as f64)?,
                            report,
                            commands: commands + 1,
                            duration_ms: at - self.test_started_ms,
                        });
                        finished = true;
                        arrangement.clone()
                    }
                    other => {
                        return Err(Error::Domain(format!("{other:?} is not a hue board command")));
                    }
                };
                if !finished {
                    self.live = Some(LiveTest::Hue {
                        arrangement: next,
                        commands: commands + 1,
                    });
                }
                None
            }
        };
        self.responses.push(response.clone());
        self.trials.push(TrialRecord {
            session_id: self.session_id.clone(),
            participant_id: self.plan.participant_id.clone(),
            seq,
            condition_index: cond,
            condition: self.plan.conditions[cond].clone(),
            test,
            stimulus,
            response: response.clone(),
            correct,
            monotonic_ms: at,
            wall_ms: record.wall_ms,
        });
        if finished {
            self.advance(at)?;
        }
        Ok(())
    }

    fn finish_staircase(&mut self, cond: usize, test: TestKind, s: &StaircaseState, at: u64) -> Result<()> {
        let level = s.threshold_estimate()?;
        let duration_ms = at - self.test_started_ms;
        if test == TestKind::Acuity {
            let result = AcuityResult::from_logmar(level)?;
            self.results[cond].acuity = Some(AcuityOutcome {
                band: classify_acuity(result.logmar)?,
                result,
                trials: s.trial_count(),
                duration_ms,
            });
        } else {
            let grayscale = (1.0 - level).clamp(0.0, 1.0);
            let weber = grayscale_to_weber(grayscale, &self.calibration.curve)?;
            let result = contrast_result_from_threshold(weber)?;
            self.results[cond].contrast = Some(ContrastOutcome {
                terminal_level: level,
                grayscale,
                weber_contrast: weber,
                band: classify_cs(result.log_cs)?,
                result,
                trials: s.trial_count(),
                duration_ms,
            });
        }
        Ok(())
    }

    fn advance(&mut self, at: u64) -> Result<()> {
        let per = self.plan.test_order.len();
        let (cond, _) = self.current().expect("advancing from a live test");
        self.step += 1;
        self.live = None;
        if self.step.is_multiple_of(per) {
            self.results[cond].duration_ms = Some(at - self.condition_started_ms);
        }
        if self.step == self.schedule_len() {
            self.status = SessionStatus::Complete;
        } else if self.step.is_multiple_of(per) {
            self.awaiting_rest = true;
        } else {
            self.begin_test(at)?;
        }
        Ok(())
    }
}

fn judge(stimulus: &StimulusBody, response: &Response) -> Result<bool> {
    match (stimulus, response) {
        (_, Response::Judged { correct }) => Ok(*correct),
        (StimulusBody::Acuity { orientation, .. }, Response::Orientation { orientation: given }) => Ok(orientation == given),
        (StimulusBody::Contrast { letters, .. }, Response::Letters { letters: given }) => Ok(letters == given),
        (s, r) => Err(Error::Domain(format!(
            "{r:?} does not answer a {} stimulus",
            match s {
                StimulusBody::Acuity { .. } => "acuity",
                StimulusBody::Contrast { .. } => "contrast",
                StimulusBody::Hue { .. } => "hue",
            }
        ))),
    }
}

impl Session {
    /// Records the `Created` event through `journal` and returns the session.
    pub fn create(
        session_id: impl Into<String>,
        plan: SessionPlan,
        calibration: CalibrationProfile,
        clock: &dyn Clock,
        journal: &mut dyn Journal,
    ) -> Result<Self> {
        let session_id = session_id.into();
        let record = EventRecord {
            index: 0,
            monotonic_ms: clock.monotonic_ms(),
            wall_ms: clock.wall_ms(),
            event: Event::Created {
                session_id: session_id.clone(),
                plan: plan.clone(),
                calibration: calibration.clone(),
                artifact_version: ARTIFACT_VERSION.to_string(),
            },
        };
        let state = SessionState::new(session_id, plan, calibration, ARTIFACT_VERSION.to_string(), record.monotonic_ms)?;
        journal.append(std::slice::from_ref(&record))?;
        Ok(Self {
            state,
            events: vec![record],
        })
    }

    /// Rebuilds a session by folding its full event list.
    pub fn replay(events: Vec<EventRecord>) -> Result<Self> {
        let mut it = events.iter();
        let first = it.next().ok_or_else(|| Error::State("event log is empty".into()))?;
        let Event::Created {
            session_id,
            plan,
            calibration,
            artifact_version,
        } = &first.event
        else {
            return Err(Error::State("event log must begin with a created event".into()));
        };
        if first.index != 0 {
            return Err(Error::State("first event must have index 0".into()));
        }
        let mut state = SessionState::new(
            session_id.clone(),
            plan.clone(),
            calibration.clone(),
            artifact_version.clone(),
            first.monotonic_ms,
        )?;
        for record in it {
            state.apply(record)?;
        }
        Ok(Self { state, events })
    }

    /// Resumes from a checkpoint plus the full event list; events after the
    /// checkpoint are folded on top of it.
    pub fn from_snapshot(snapshot: Snapshot, events: Vec<EventRecord>) -> Result<Self> {
        let n = snapshot.event_count as usize;
        if snapshot.format_version != SESSION_FORMAT_VERSION || n > events.len() || n == 0 {
            return Self::replay(events);
        }
        let mut state = snapshot.state;
        for record in &events[n..] {
            state.apply(record)?;
        }
        Ok(Self { state, events })
    }

    fn commit(&mut self, batch: Vec<Event>, clock: &dyn Clock, journal: &mut dyn Journal) -> Result<()> {
        let mut next = self.state.clone();
        let mut records = Vec::with_capacity(batch.len());
        let at = clock.monotonic_ms().max(self.state.last_ms);
        let wall = clock.wall_ms();
        for event in batch {
            let record = EventRecord {
                index: next.event_count,
                monotonic_ms: at,
                wall_ms: wall,
                event,
            };
            next.apply(&record)?;
            records.push(record);
        }
        journal.append(&records)?;
        let before = self.events.len();
        self.events.extend(records);
        self.state = next;
        if before / SNAPSHOT_EVERY != self.events.len() / SNAPSHOT_EVERY {
            // The event log is authoritative; a missed checkpoint only slows a reload.
            let _ = journal.snapshot(&self.snapshot());
        }
        Ok(())
    }

    pub fn start(&mut self, clock: &dyn Clock, journal: &mut dyn Journal) -> Result<Progress> {
        self.commit(vec![Event::Started], clock, journal)?;
        Ok(self.progress())
    }

    /// The pending stimulus. Repeated calls return the same descriptor until
    /// a response is applied.
    pub fn next_stimulus(&self) -> Result<StimulusDescriptor> {
        self.state.stimulus()
    }

    /// Applies the response to stimulus `seq`. Re-sending an already applied
    /// `(seq, response)` pair is acknowledged without effect.
    pub fn submit(&mut self, seq: u64, response: Response, clock: &dyn Clock, journal: &mut dyn Journal) -> Result<Ack> {
        let expected = self.state.next_seq();
        if seq < expected && seq >= 1 {
            if self.state.responses[seq as usize - 1] == response {
                let trial = self.state.trials.iter().find(|t| t.seq == seq);
                return Ok(Ack {
                    seq,
                    duplicate: true,
                    correct: trial.and_then(|t| t.correct),
                    test_completed: false,
                    progress: self.progress(),
                });
            }
            return Err(Error::Sequence { expected, got: seq });
        }
        if seq != expected {
            return Err(Error::Sequence { expected, got: seq });
        }
        let step = self.state.step;
        self.commit(vec![Event::Responded { seq, response }], clock, journal)?;
        Ok(Ack {
            seq,
            duplicate: false,
            correct: self.state.trials.last().and_then(|t| t.correct),
            test_completed: self.state.step != step,
            progress: self.progress(),
        })
    }

    pub fn acknowledge_rest(&mut self, clock: &dyn Clock, journal: &mut dyn Journal) -> Result<Progress> {
        self.commit(vec![Event::RestAcknowledged], clock, journal)?;
        Ok(self.progress())
    }

    pub fn suspend(&mut self, reason: impl Into<String>, clock: &dyn Clock, journal: &mut dyn Journal) -> Result<Progress> {
        self.commit(vec![Event::Suspended { reason: reason.into() }], clock, journal)?;
        Ok(self.progress())
    }

    pub fn resume(&mut self, clock: &dyn Clock, journal: &mut dyn Journal) -> Result<Progress> {
        self.commit(vec![Event::Resumed], clock, journal)?;
        Ok(self.progress())
    }

    /// Time left before a hue submission is accepted, if a hue test is live.
    pub fn hue_remaining_ms(&self, clock: &dyn Clock) -> Option<u64> {
        match (&self.state.live, self.state.status) {
            (Some(LiveTest::Hue { .. }), SessionStatus::Running) => {
                let now = clock.monotonic_ms().max(self.state.last_ms);
                Some(self.state.plan.hue_min_duration_ms.saturating_sub(now - self.state.test_started_ms))
            }
            _ => None,
        }
    }

    pub fn session_id(&self) -> &str {
        &self.state.session_id
    }

    pub fn plan(&self) -> &SessionPlan {
        &self.state.plan
    }

    pub fn calibration(&self) -> &CalibrationProfile {
        &self.state.calibration
    }

    pub fn status(&self) -> SessionStatus {
        self.state.status
    }

    pub fn awaiting_rest(&self) -> bool {
        self.state.awaiting_rest
    }

    /// (condition index, test) of the test in progress or up next.
    pub fn current_test(&self) -> Option<(usize, TestKind)> {
        if self.state.status == SessionStatus::Complete {
            None
        } else {
            self.state.current()
        }
    }

    pub fn progress(&self) -> Progress {
        self.state.progress()
    }

    pub fn result(&self) -> SessionResult {
        self.state.result()
    }

    pub fn trials(&self) -> &[TrialRecord] {
        &self.state.trials
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    /// Live staircase of the current test, if it is a staircase test.
    pub fn staircase(&self) -> Option<&StaircaseState> {
        match &self.state.live {
            Some(LiveTest::Staircase(s)) => Some(s),
            _ => None,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            format_version: SESSION_FORMAT_VERSION,
            event_count: self.events.len() as u64,
            state: self.state.clone(),
        }
    }
}
