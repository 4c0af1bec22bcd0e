use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::clock::Clock;
use super::engine::{ConditionResult, Journal, Session, SessionResult, SessionStatus, TrialRecord};
use super::plan::{Condition, TestKind};
use super::stimulus::{Orientation, Response, SloanLetter, StimulusBody, StimulusDescriptor};
use crate::hue::CapSet;
use crate::observer::{HueObserver, Observer};
use crate::{Error, Result};

/// Produces the operator's entry for each stimulus.
pub trait ResponseSource {
    /// May advance `clock` to model response latency. Returning
    /// [`Error::Disconnected`] suspends the session.
    fn respond(&mut self, stimulus: &StimulusDescriptor, condition: &Condition, clock: &dyn Clock) -> Result<Response>;
}

/// Simulated participant behaviour under one device.
#[derive(Debug, Clone)]
pub struct SimulatedDevice {
    pub acuity: Observer,
    pub contrast: Observer,
    pub hue: HueObserver,
}

/// Per-device simulated observers keyed by device label.
#[derive(Debug, Clone)]
pub struct SimulatedSource {
    devices: BTreeMap<String, SimulatedDevice>,
    caps: CapSet,
    trial_ms: u64,
    hue_ms: u64,
    arranged: Option<Vec<Vec<u16>>>,
}

impl SimulatedSource {
    /// `trial_ms` is charged per staircase trial and `hue_ms` for arranging a board.
    pub fn new(devices: BTreeMap<String, SimulatedDevice>, trial_ms: u64, hue_ms: u64) -> Self {
        Self {
            devices,
            caps: CapSet::standard(),
            trial_ms,
            hue_ms,
            arranged: None,
        }
    }

    fn device(&mut self, condition: &Condition) -> Result<&mut SimulatedDevice> {
        self.devices
            .get_mut(&condition.device_label)
            .ok_or_else(|| Error::Config(format!("no simulated observer for device {:?}", condition.device_label)))
    }
}

impl ResponseSource for SimulatedSource {
    fn respond(&mut self, stimulus: &StimulusDescriptor, condition: &Condition, clock: &dyn Clock) -> Result<Response> {
        let (trial_ms, hue_ms) = (self.trial_ms, self.hue_ms);
        match &stimulus.body {
            StimulusBody::Acuity {
                level_logmar, orientation, ..
            } => {
                clock.sleep_ms(trial_ms);
                let obs = &mut self.device(condition)?.acuity;
                let answer = if obs.respond(*level_logmar) {
                    *orientation
                } else {
                    let others: Vec<Orientation> = Orientation::ALL.into_iter().filter(|o| o != orientation).collect();
                    others[obs.pick(others.len())]
                };
                Ok(Response::Orientation { orientation: answer })
            }
            StimulusBody::Contrast { level, letters, .. } => {
                clock.sleep_ms(trial_ms);
                let obs = &mut self.device(condition)?.contrast;
                let mut answer = *letters;
                if !obs.respond(*level) {
                    let slot = obs.pick(2);
                    let others: Vec<SloanLetter> = SloanLetter::ALL.into_iter().filter(|l| *l != letters[slot]).collect();
                    answer[slot] = others[obs.pick(others.len())];
                }
                Ok(Response::Letters { letters: answer })
            }
            StimulusBody::Hue { arrangement, .. } => {
                if self.arranged.as_ref() == Some(arrangement) {
                    self.arranged = None;
                    return Ok(Response::HueSubmit {});
                }
                clock.sleep_ms(hue_ms);
                let caps = self.caps.clone();
                let groups = self.device(condition)?.hue.arrange(&caps).groups().to_vec();
                self.arranged = Some(groups.clone());
                Ok(Response::HueArrange { groups })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedStep {
    /// Clock advance before the response is entered.
    pub delay_ms: u64,
    pub response: Response,
}

/// Plays back a fixed list of responses, then reports a disconnect.
#[derive(Debug, Clone, Default)]
pub struct ScriptedSource {
    steps: VecDeque<ScriptedStep>,
}

impl ScriptedSource {
    pub fn new(steps: impl IntoIterator<Item = ScriptedStep>) -> Self {
        Self {
            steps: steps.into_iter().collect(),
        }
    }

    pub fn with_delay(responses: impl IntoIterator<Item = Response>, delay_ms: u64) -> Self {
        Self::new(responses.into_iter().map(|response| ScriptedStep { delay_ms, response }))
    }

    /// Replays recorded trials with their recorded spacing; the first delay
    /// is measured from `origin_ms`.
    pub fn from_trials(trials: &[TrialRecord], origin_ms: u64) -> Self {
        let mut prev = origin_ms;
        Self::new(trials.iter().map(|t| {
            let step = ScriptedStep {
                delay_ms: t.monotonic_ms.saturating_sub(prev),
                response: t.response.clone(),
            };
            prev = t.monotonic_ms;
            step
        }))
    }

    pub fn remaining(&self) -> usize {
        self.steps.len()
    }
}

impl ResponseSource for ScriptedSource {
    fn respond(&mut self, _stimulus: &StimulusDescriptor, _condition: &Condition, clock: &dyn Clock) -> Result<Response> {
        let step = self.steps.pop_front().ok_or(Error::Disconnected)?;
        clock.sleep_ms(step.delay_ms);
        Ok(step.response)
    }
}

/// Output of one test run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFragment {
    pub condition_index: usize,
    pub test: TestKind,
    pub result: ConditionResult,
    pub trials: Vec<TrialRecord>,
}

/// Drives the session's current test to completion.
///
/// An early hue submission makes the driver wait out the gate on `clock`
/// and resubmit. A disconnected source suspends the session and the error
/// is returned; the session can be resumed later.
pub fn run_test(
    session: &mut Session,
    source: &mut dyn ResponseSource,
    clock: &dyn Clock,
    journal: &mut dyn Journal,
) -> Result<TestFragment> {
    if session.status() != SessionStatus::Running || session.awaiting_rest() {
        return Err(Error::State("no test is ready to run".into()));
    }
    let (cond, test) = session
        .current_test()
        .ok_or_else(|| Error::State("no test is ready to run".into()))?;
    let condition = session.plan().conditions[cond].clone();
    let first_trial = session.trials().len();
    loop {
        let stimulus = session.next_stimulus()?;
        let response = match source.respond(&stimulus, &condition, clock) {
            Ok(r) => r,
            Err(Error::Disconnected) => {
                session.suspend("response source disconnected", clock, journal)?;
                return Err(Error::Disconnected);
            }
            Err(e) => return Err(e),
        };
        let ack = match session.submit(stimulus.seq, response.clone(), clock, journal) {
            Err(Error::HueGate { remaining_ms }) => {
                clock.sleep_ms(remaining_ms);
                session.submit(stimulus.seq, response, clock, journal)?
            }
            other => other?,
        };
        if ack.test_completed {
            break;
        }
    }
    let result = session.result().conditions[cond].clone();
    Ok(TestFragment {
        condition_index: cond,
        test,
        result,
        trials: session.trials()[first_trial..].to_vec(),
    })
}

/// Runs every remaining test, starting or resuming the session as needed
/// and acknowledging rest periods immediately.
pub fn run_session(
    session: &mut Session,
    source: &mut dyn ResponseSource,
    clock: &dyn Clock,
    journal: &mut dyn Journal,
) -> Result<SessionResult> {
    loop {
        match session.status() {
            SessionStatus::Created => {
                session.start(clock, journal)?;
            }
            SessionStatus::Suspended => {
                session.resume(clock, journal)?;
            }
            SessionStatus::Complete => return Ok(session.result()),
            SessionStatus::Running if session.awaiting_rest() => {
                session.acknowledge_rest(clock, journal)?;
            }
            SessionStatus::Running => {
                run_test(session, source, clock, journal)?;
            }
        }
    }
}
