//! Benchmark sessions: counterbalanced plans, stimulus generation, an
//! event-sourced state machine per participant, response drivers,
//! persistence and exports.

mod clock;
mod driver;
mod engine;
mod export;
mod plan;
mod stimulus;
mod store;

pub use clock::{Clock, ManualClock, SystemClock};
pub use driver::{run_session, run_test, ResponseSource, ScriptedSource, ScriptedStep, SimulatedDevice, SimulatedSource, TestFragment};
pub use engine::{
    AcuityOutcome, Ack, ConditionResult, ContrastOutcome, Event, EventRecord, HueOutcome, InMemory, Journal, Progress,
    Session, SessionResult, SessionState, SessionStatus, Snapshot, TrialRecord, SESSION_FORMAT_VERSION, SNAPSHOT_EVERY,
};
pub use export::{read_trials_csv, write_trials_csv, SessionDocument, TrialLog, TRIAL_TABLE_VERSION};
pub use plan::{
    build_plan, latin_square_orders, Condition, LightLevel, SessionPlan, TestKind, DEFAULT_HUE_MIN_DURATION_MS,
    PLAN_FORMAT_VERSION,
};
pub use stimulus::{HueCapView, Orientation, Response, SloanLetter, StimulusBody, StimulusDescriptor, CONTRAST_LETTER_LOGMAR};
pub use store::{FileJournal, FileStore};

#[cfg(test)]
mod tests;
