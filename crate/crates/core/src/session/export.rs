//! Session documents and tabular exports.
//!
//! The trial table has one row per applied response with these columns, in
//! order:
//!
//! | column | meaning |
//! |---|---|
//! | `format_version` | table schema version |
//! | `session_id`, `participant_id` | identifiers |
//! | `seq` | response sequence number within the session |
//! | `condition_index` | position of the condition in the plan |
//! | `device_label`, `light_label`, `illuminance_lux` | condition, lux |
//! | `test` | `acuity`, `contrast` or `hue` |
//! | `level` | staircase level: logMAR for acuity, letter darkness for contrast; empty for hue |
//! | `correct` | `true`/`false`; empty for hue commands |
//! | `monotonic_ms`, `wall_ms` | session clock and Unix epoch, milliseconds |
//! | `stimulus_json`, `response_json` | full descriptor and response as JSON |

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::engine::{EventRecord, Session, SessionResult, TrialRecord, SESSION_FORMAT_VERSION};
use super::plan::{Condition, LightLevel};
use crate::stats::analysis::{ResultRow, METRIC_LOGCS, METRIC_LOGMAR, METRIC_TES};
use crate::{Error, Result};

pub const TRIAL_TABLE_VERSION: u32 = 1;

/// Complete session: the event log plus everything derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionDocument {
    pub format_version: u32,
    pub artifact_version: String,
    pub session_id: String,
    pub events: Vec<EventRecord>,
    pub trials: Vec<TrialRecord>,
    pub result: SessionResult,
}

impl SessionDocument {
    pub fn from_session(session: &Session) -> Self {
        let result = session.result();
        Self {
            format_version: SESSION_FORMAT_VERSION,
            artifact_version: result.artifact_version.clone(),
            session_id: session.session_id().to_string(),
            events: session.events().to_vec(),
            trials: session.trials().to_vec(),
            result,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses a document and checks the derived parts against a replay of
    /// its events.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.format_version != SESSION_FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported session format_version {}",
                doc.format_version
            )));
        }
        let session = doc.to_session()?;
        if session.trials() != doc.trials.as_slice() || session.result() != doc.result {
            return Err(Error::Parse("trials or result disagree with the event log".into()));
        }
        Ok(doc)
    }

    pub fn to_session(&self) -> Result<Session> {
        Session::replay(self.events.clone())
    }
}

/// A bare trial log, the structured counterpart of the trial table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialLog {
    pub format_version: u32,
    pub trials: Vec<TrialRecord>,
}

impl TrialLog {
    pub fn new(trials: Vec<TrialRecord>) -> Self {
        Self {
            format_version: TRIAL_TABLE_VERSION,
            trials,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TrialRow {
    format_version: u32,
    session_id: String,
    participant_id: String,
    seq: u64,
    condition_index: usize,
    device_label: String,
    light_label: String,
    illuminance_lux: f64,
    test: String,
    level: Option<f64>,
    correct: Option<bool>,
    monotonic_ms: u64,
    wall_ms: u64,
    stimulus_json: String,
    response_json: String,
}

pub fn write_trials_csv<W: Write>(writer: W, trials: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for t in trials {
        w.serialize(TrialRow {
            format_version: TRIAL_TABLE_VERSION,
            session_id: t.session_id.clone(),
            participant_id: t.participant_id.clone(),
            seq: t.seq,
            condition_index: t.condition_index,
            device_label: t.condition.device_label.clone(),
            light_label: t.condition.light_level.label.clone(),
            illuminance_lux: t.condition.light_level.illuminance_lux,
            test: t.test.to_string(),
            level: t.stimulus.level(),
            correct: t.correct,
            monotonic_ms: t.monotonic_ms,
            wall_ms: t.wall_ms,
            stimulus_json: serde_json::to_string(&t.stimulus)?,
            response_json: serde_json::to_string(&t.response)?,
        })?;
    }
    w.flush().map_err(|e| Error::io("<trial table>", e))?;
    Ok(())
}

pub fn read_trials_csv<R: Read>(reader: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: TrialRow = row?;
        if row.format_version != TRIAL_TABLE_VERSION {
            return Err(Error::Parse(format!("unsupported trial table version {}", row.format_version)));
        }
        let stimulus: super::stimulus::StimulusDescriptor = serde_json::from_str(&row.stimulus_json)?;
        let test = row.test.parse()?;
        if stimulus.test() != test || stimulus.seq != row.seq {
            return Err(Error::Parse(format!("row {}: stimulus does not match test/seq columns", row.seq)));
        }
        out.push(TrialRecord {
            session_id: row.session_id,
            participant_id: row.participant_id,
            seq: row.seq,
            condition_index: row.condition_index,
            condition: Condition {
                device_label: row.device_label,
                light_level: LightLevel {
                    label: row.light_label,
                    illuminance_lux: row.illuminance_lux,
                },
            },
            test,
            stimulus,
            response: serde_json::from_str(&row.response_json)?,
            correct: row.correct,
            monotonic_ms: row.monotonic_ms,
            wall_ms: row.wall_ms,
        });
    }
    Ok(out)
}

impl SessionResult {
    /// Long-format rows for the analysis pipeline, one per finished metric.
    pub fn result_rows(&self) -> Vec<ResultRow> {
        let mut rows = Vec::new();
        for c in &self.conditions {
            let mut push = |metric: &str, value: f64| {
                rows.push(ResultRow {
                    participant: self.plan.participant_id.clone(),
                    condition: c.condition.device_label.clone(),
                    light_level: c.condition.light_level.label.clone(),
                    metric: metric.to_string(),
                    value,
                })
            };
            if let Some(a) = &c.acuity {
                push(METRIC_LOGMAR, a.result.logmar);
            }
            if let Some(k) = &c.contrast {
                push(METRIC_LOGCS, k.result.log_cs);
            }
            if let Some(h) = &c.hue {
                push(METRIC_TES, h.report.total as f64);
            }
        }
        rows
    }
}
