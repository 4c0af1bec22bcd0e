use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const PLAN_FORMAT_VERSION: u32 = 1;

/// Minimum time on the hue board before a submission is accepted.
pub const DEFAULT_HUE_MIN_DURATION_MS: u64 = 8 * 60 * 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightLevel {
    pub label: String,
    /// Operator-entered meter reading.
    pub illuminance_lux: f64,
}

impl LightLevel {
    pub fn new(label: impl Into<String>, illuminance_lux: f64) -> Result<Self> {
        let light = Self {
            label: label.into(),
            illuminance_lux,
        };
        light.validate()?;
        Ok(light)
    }

    pub fn normal() -> Self {
        Self::new("normal", 572.0).expect("valid")
    }

    pub fn low() -> Self {
        Self::new("low", 117.0).expect("valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.label.trim().is_empty() {
            return Err(Error::Config("light_level.label must not be empty".into()));
        }
        if !(self.illuminance_lux > 0.0 && self.illuminance_lux.is_finite()) {
            return Err(Error::Config(format!(
                "light_level.illuminance_lux must be positive, got {}",
                self.illuminance_lux
            )));
        }
        Ok(())
    }
}

/// A device (or the naked eye) under a light level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub device_label: String,
    pub light_level: LightLevel,
}

impl Condition {
    pub fn new(device_label: impl Into<String>, light_level: LightLevel) -> Result<Self> {
        let c = Self {
            device_label: device_label.into(),
            light_level,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.device_label.trim().is_empty() {
            return Err(Error::Config("device_label must not be empty".into()));
        }
        self.light_level.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Acuity,
    Contrast,
    Hue,
}

impl TestKind {
    pub const ALL: [TestKind; 3] = [TestKind::Acuity, TestKind::Contrast, TestKind::Hue];

    pub fn as_str(&self) -> &'static str {
        match self {
            TestKind::Acuity => "acuity",
            TestKind::Contrast => "contrast",
            TestKind::Hue => "hue",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "acuity" => Ok(TestKind::Acuity),
            "contrast" => Ok(TestKind::Contrast),
            "hue" => Ok(TestKind::Hue),
            other => Err(Error::Parse(format!("unknown test kind {other:?}"))),
        }
    }
}

/// Rows of a Latin square over `n` items.
///
/// Even `n` gives the Williams design, in which every ordered adjacency
/// occurs exactly once. Odd `n` gives the cyclic square.
pub fn latin_square_orders(n: usize) -> Result<Vec<Vec<usize>>> {
    if n == 0 {
        return Err(Error::Domain("latin square needs at least one item".into()));
    }
    let first: Vec<usize> = if n.is_multiple_of(2) {
        // 0, 1, n-1, 2, n-2, ...
        let (mut lo, mut hi) = (1, n - 1);
        let mut row = vec![0];
        while row.len() < n {
            row.push(lo);
            lo += 1;
            if row.len() < n {
                row.push(hi);
                hi -= 1;
            }
        }
        row
    } else {
        (0..n).collect()
    };
    Ok((0..n)
        .map(|r| first.iter().map(|v| (v + r) % n).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionPlan {
    pub format_version: u32,
    pub participant_id: String,
    pub participant_index: u32,
    /// In presentation order.
    pub conditions: Vec<Condition>,
    pub test_order: Vec<TestKind>,
    pub seed: u64,
    pub calibration_id: String,
    pub hue_min_duration_ms: u64,
}

impl SessionPlan {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != PLAN_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported plan format_version {}",
                self.format_version
            )));
        }
        if self.participant_id.trim().is_empty() {
            return Err(Error::Config("participant_id must not be empty".into()));
        }
        if self.conditions.is_empty() {
            return Err(Error::Config("plan needs at least one condition".into()));
        }
        for c in &self.conditions {
            c.validate()?;
        }
        let mut tests = self.test_order.clone();
        tests.sort();
        if tests != TestKind::ALL {
            return Err(Error::Config(format!(
                "test_order must be a permutation of acuity, contrast, hue; got {:?}",
                self.test_order
            )));
        }
        Ok(())
    }

    /// (condition index, test) pairs in run order.
    pub fn schedule(&self) -> Vec<(usize, TestKind)> {
        (0..self.conditions.len())
            .flat_map(|c| self.test_order.iter().map(move |t| (c, *t)))
            .collect()
    }
}

/// Counterbalanced plan for one participant: conditions follow row
/// `index mod n` of the condition square, tests row `index mod 3` of the
/// test square.
pub fn build_plan(
    participant_index: u32,
    conditions: &[Condition],
    tests: &[TestKind],
    seed: u64,
    calibration_id: &str,
) -> Result<SessionPlan> {
    if conditions.is_empty() {
        return Err(Error::Config("condition list is empty".into()));
    }
    let i = participant_index as usize;
    let condition_row = &latin_square_orders(conditions.len())?[i % conditions.len()];
    let test_row = &latin_square_orders(tests.len().max(1))?[i % tests.len().max(1)];
    let plan = SessionPlan {
        format_version: PLAN_FORMAT_VERSION,
        participant_id: format!("P{:03}", participant_index + 1),
        participant_index,
        conditions: condition_row.iter().map(|&c| conditions[c].clone()).collect(),
        test_order: test_row.iter().filter_map(|&t| tests.get(t).copied()).collect(),
        seed,
        calibration_id: calibration_id.to_string(),
        hue_min_duration_ms: DEFAULT_HUE_MIN_DURATION_MS,
    };
    plan.validate()?;
    Ok(plan)
}
