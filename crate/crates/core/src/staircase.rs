//! Bisection staircase.
//!
//! The difficulty parameter is bracketed between a level the observer is
//! known to pass (`bracket_easy`) and one known to fail or not yet explored
//! (`bracket_hard`). The probe always sits at one end of the current bracket
//! and moves to the midpoint after each level resolution:
//!
//! * `passes_required_per_level` consecutive correct answers pass the level,
//!   which becomes the new easy bound;
//! * a single wrong answer fails the level, which becomes the new hard bound.
//!
//! The run terminates as soon as a resolution moves the probe by less than
//! `termination_delta`; the estimate is the midpoint of the final bracket.
//!
//! [`StaircaseState`] is an immutable value: [`StaircaseState::submit_response`]
//! returns the successor state.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaircaseConfig {
    pub easiest_level: f64,
    pub hardest_level: f64,
    pub termination_delta: f64,
    pub passes_required_per_level: u32,
    /// Size of the response set (4 for the tumbling E). Metadata only.
    pub alternatives_per_trial: u32,
}

impl StaircaseConfig {
    /// Tumbling-E acuity: levels are logMAR, from 1.0 down to the display
    /// floor of −0.62; eight consecutive correct answers pass a level.
    pub fn acuity() -> Self {
        Self {
            easiest_level: 1.0,
            hardest_level: -0.62,
            termination_delta: 0.001,
            passes_required_per_level: 8,
            alternatives_per_trial: 4,
        }
    }

    /// Two-letter contrast chart: levels are letter darkness `1 − grayscale`
    /// (1.0 black letters, 0.0 invisible); one letter pair per level.
    pub fn contrast() -> Self {
        Self {
            easiest_level: 1.0,
            hardest_level: 0.0,
            termination_delta: 0.0001,
            passes_required_per_level: 1,
            alternatives_per_trial: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.easiest_level, self.hardest_level, self.termination_delta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("staircase levels must be finite".into()));
        }
        if self.easiest_level == self.hardest_level {
            return Err(Error::Config("easiest and hardest level coincide".into()));
        }
        if !(self.termination_delta > 0.0) {
            return Err(Error::Config("termination delta must be positive".into()));
        }
        if self.termination_delta >= self.initial_width() {
            return Err(Error::Config(format!(
                "termination delta {} is not smaller than the level range {}",
                self.termination_delta,
                self.initial_width()
            )));
        }
        if self.passes_required_per_level == 0 || self.alternatives_per_trial == 0 {
            return Err(Error::Config(
                "passes per level and alternatives must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn initial_width(&self) -> f64 {
        (self.easiest_level - self.hardest_level).abs()
    }

    /// Upper bound on level resolutions before termination.
    pub fn max_resolutions(&self) -> u32 {
        (self.initial_width() / self.termination_delta).log2().ceil() as u32 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StaircaseStatus {
    Running,
    Terminated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub level: f64,
    pub correct: bool,
    /// Monotonic time of the response in milliseconds since an arbitrary origin.
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseState {
    config: StaircaseConfig,
    bracket_easy: f64,
    bracket_hard: f64,
    current_level: f64,
    consecutive_correct: u32,
    resolutions: u32,
    trials: Vec<TrialOutcome>,
    status: StaircaseStatus,
    final_threshold: Option<f64>,
}

/// What a response did to the current level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelEvent {
    /// Counted toward the pass requirement; level unchanged.
    Continue,
    Passed,
    Failed,
}

impl StaircaseState {
    /// Starts at the easiest level with the full range bracketed.
    pub fn start(config: StaircaseConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            bracket_easy: config.easiest_level,
            bracket_hard: config.hardest_level,
            current_level: config.easiest_level,
            consecutive_correct: 0,
            resolutions: 0,
            trials: Vec::new(),
            status: StaircaseStatus::Running,
            final_threshold: None,
        })
    }

    /// Applies one response, timestamped after the previous one.
    pub fn submit_response(&self, correct: bool) -> Result<Self> {
        let at = self.trials.last().map_or(0, |t| t.timestamp_ms);
        self.submit_response_at(correct, at)
    }

    /// Applies one response recorded at monotonic time `timestamp_ms`.
    pub fn submit_response_at(&self, correct: bool, timestamp_ms: u64) -> Result<Self> {
        Ok(self.step(correct, timestamp_ms)?.0)
    }

    /// Like [`Self::submit_response_at`], also reporting the level event.
    pub fn step(&self, correct: bool, timestamp_ms: u64) -> Result<(Self, LevelEvent)> {
        if self.status == StaircaseStatus::Terminated {
            return Err(Error::State("staircase already terminated".into()));
        }
        if let Some(last) = self.trials.last() {
            if timestamp_ms < last.timestamp_ms {
                return Err(Error::State(format!(
                    "response timestamp {timestamp_ms} precedes previous {}",
                    last.timestamp_ms
                )));
            }
        }
        let mut next = self.clone();
        next.trials.push(TrialOutcome {
            level: self.current_level,
            correct,
            timestamp_ms,
        });

        let event = if correct {
            next.consecutive_correct += 1;
            if next.consecutive_correct < self.config.passes_required_per_level {
                return Ok((next, LevelEvent::Continue));
            }
            next.bracket_easy = self.current_level;
            LevelEvent::Passed
        } else {
            next.bracket_hard = self.current_level;
            LevelEvent::Failed
        };

        next.consecutive_correct = 0;
        next.resolutions += 1;
        let probe = midpoint(next.bracket_easy, next.bracket_hard);
        next.current_level = probe;
        if (probe - self.current_level).abs() < self.config.termination_delta {
            next.status = StaircaseStatus::Terminated;
            next.final_threshold = Some(probe);
        }
        Ok((next, event))
    }

    /// Midpoint of the terminal bracket.
    pub fn threshold_estimate(&self) -> Result<f64> {
        self.final_threshold
            .ok_or_else(|| Error::State("staircase still running".into()))
    }

    pub fn trial_count(&self) -> usize {
        self.trials.len()
    }

    pub fn config(&self) -> &StaircaseConfig {
        &self.config
    }

    pub fn current_level(&self) -> f64 {
        self.current_level
    }

    pub fn bracket_easy(&self) -> f64 {
        self.bracket_easy
    }

    pub fn bracket_hard(&self) -> f64 {
        self.bracket_hard
    }

    pub fn bracket_width(&self) -> f64 {
        (self.bracket_easy - self.bracket_hard).abs()
    }

    pub fn consecutive_correct(&self) -> u32 {
        self.consecutive_correct
    }

    /// Number of levels passed or failed so far.
    pub fn resolutions(&self) -> u32 {
        self.resolutions
    }

    pub fn trials(&self) -> &[TrialOutcome] {
        &self.trials
    }

    pub fn status(&self) -> StaircaseStatus {
        self.status
    }

    pub fn is_terminated(&self) -> bool {
        self.status == StaircaseStatus::Terminated
    }

    pub fn final_threshold(&self) -> Option<f64> {
        self.final_threshold
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    (a + b) / 2.0
}
