//! Digital 100-hue arrangement test.
//!
//! 85 caps sit on a hue circle and are split into four contiguous groups.
//! The first and last cap of every group are pinned; the interior caps are
//! shuffled and the observer restores their order. Each interior cap is
//! scored from its two neighbours as `|prev − cap| + |next − cap| − 2`, so a
//! correctly ordered group scores zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CAP_COUNT: u16 = 85;

/// Default group split; each range is inclusive and 1-based.
pub const DEFAULT_GROUPS: [(u16, u16); 4] = [(1, 22), (23, 43), (44, 64), (65, 85)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub true_index: u16,
    /// Display RGB, each channel in [0, 1].
    pub color: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapSet {
    caps: Vec<Cap>,
    groups: Vec<(u16, u16)>,
}

impl CapSet {
    /// Evenly spaced hues at full saturation and half lightness.
    pub fn standard() -> Self {
        Self::on_hue_circle(1.0, 0.5)
    }

    /// Cap `i` gets hue `(i − 1)·360/85` degrees at the given HSL
    /// saturation and lightness.
    pub fn on_hue_circle(saturation: f64, lightness: f64) -> Self {
        let caps = (1..=CAP_COUNT)
            .map(|i| Cap {
                true_index: i,
                color: hsl_to_rgb(cap_hue_degrees(i), saturation, lightness),
            })
            .collect();
        Self {
            caps,
            groups: DEFAULT_GROUPS.to_vec(),
        }
    }

    /// Builds a cap set from explicit colors and group ranges, validating
    /// the partition.
    pub fn new(mut caps: Vec<Cap>, groups: Vec<(u16, u16)>) -> Result<Self> {
        caps.sort_by_key(|c| c.true_index);
        let n = caps.len() as u16;
        if caps.iter().enumerate().any(|(i, c)| c.true_index != i as u16 + 1) {
            return Err(Error::Config(
                "cap indices must be a permutation of 1..=n".into(),
            ));
        }
        if caps
            .iter()
            .flat_map(|c| c.color)
            .any(|v| !(0.0..=1.0).contains(&v))
        {
            return Err(Error::Config("cap color channels must lie in [0, 1]".into()));
        }
        let mut next = 1;
        for &(lo, hi) in &groups {
            if lo != next || hi < lo + 2 {
                return Err(Error::Config(format!(
                    "group {lo}..={hi} breaks the contiguous partition or has fewer than 3 caps"
                )));
            }
            next = hi + 1;
        }
        if next != n + 1 {
            return Err(Error::Config("groups do not cover every cap".into()));
        }
        Ok(Self { caps, groups })
    }

    /// Reads the override table: one `index R G B` row per cap (channels in
    /// [0, 1], separated by whitespace or commas). Blank lines and lines
    /// starting with `#` are skipped. The default group split applies.
    pub fn from_table(text: &str) -> Result<Self> {
        let mut caps = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!(
                    "line {}: expected 4 fields (index R G B), found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", lineno + 1));
            let true_index = fields[0].parse::<u16>().map_err(|_| bad("index"))?;
            let mut color = [0.0; 3];
            for (slot, f) in color.iter_mut().zip(&fields[1..]) {
                *slot = f.parse::<f64>().map_err(|_| bad("channel"))?;
            }
            caps.push(Cap { true_index, color });
        }
        if caps.len() != CAP_COUNT as usize {
            return Err(Error::Parse(format!(
                "expected {CAP_COUNT} cap rows, found {}",
                caps.len()
            )));
        }
        Self::new(caps, DEFAULT_GROUPS.to_vec())
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("# index R G B\n");
        for c in &self.caps {
            let _ = writeln!(out, "{} {} {} {}", c.true_index, c.color[0], c.color[1], c.color[2]);
        }
        out
    }

    pub fn caps(&self) -> &[Cap] {
        &self.caps
    }

    pub fn cap(&self, true_index: u16) -> Option<&Cap> {
        self.caps.get(true_index.checked_sub(1)? as usize)
    }

    pub fn groups(&self) -> &[(u16, u16)] {
        &self.groups
    }

    /// The arrangement with every cap in its true position.
    pub fn identity_arrangement(&self) -> HueArrangement {
        HueArrangement {
            groups: self.groups.iter().map(|&(lo, hi)| (lo..=hi).collect()).collect(),
        }
    }
}

pub fn cap_hue_degrees(true_index: u16) -> f64 {
    (true_index as f64 - 1.0) * 360.0 / CAP_COUNT as f64
}

fn hsl_to_rgb(hue_deg: f64, s: f64, l: f64) -> [f64; 3] {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let h = hue_deg.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    [r + m, g + m, b + m].map(|v| v.clamp(0.0, 1.0))
}

/// Current order of caps, one list of true indices per group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HueArrangement {
    groups: Vec<Vec<u16>>,
}

impl HueArrangement {
    /// Wraps explicit per-group orders, checked against `caps`.
    pub fn from_groups(caps: &CapSet, groups: Vec<Vec<u16>>) -> Result<Self> {
        let arrangement = Self { groups };
        arrangement.validate(caps)?;
        Ok(arrangement)
    }

    /// Unchecked constructor for synthetic groups (used by scoring tests and
    /// the simulated observer); pinning is not enforced.
    pub fn from_orders(groups: Vec<Vec<u16>>) -> Self {
        Self { groups }
    }

    pub fn validate(&self, caps: &CapSet) -> Result<()> {
        if self.groups.len() != caps.groups().len() {
            return Err(Error::Config(format!(
                "arrangement has {} groups, cap set has {}",
                self.groups.len(),
                caps.groups().len()
            )));
        }
        for (g, (order, &(lo, hi))) in self.groups.iter().zip(caps.groups()).enumerate() {
            if order.len() != (hi - lo + 1) as usize {
                return Err(Error::Config(format!("group {} has wrong size", g + 1)));
            }
            if order[0] != lo || order[order.len() - 1] != hi {
                return Err(Error::Position(format!(
                    "group {} endpoints must stay pinned to {lo} and {hi}",
                    g + 1
                )));
            }
            let mut sorted = order.clone();
            sorted.sort_unstable();
            if sorted.iter().zip(lo..=hi).any(|(a, b)| *a != b) {
                return Err(Error::Config(format!(
                    "group {} is not a permutation of {lo}..={hi}",
                    g + 1
                )));
            }
        }
        Ok(())
    }

    pub fn groups(&self) -> &[Vec<u16>] {
        &self.groups
    }

    /// Moves the cap at `from` to `to` within `group` (1-based group number,
    /// 0-based positions) with remove-then-insert semantics. Both positions
    /// must be interior.
    pub fn move_cap(&self, group: usize, from: usize, to: usize) -> Result<Self> {
        let order = group
            .checked_sub(1)
            .and_then(|g| self.groups.get(g))
            .ok_or_else(|| Error::Position(format!("no group {group}")))?;
        let last = order.len() - 1;
        for (name, pos) in [("source", from), ("target", to)] {
            if pos == 0 || pos >= last {
                return Err(Error::Position(format!(
                    "{name} position {pos} in group {group} is not an interior slot (1..{last})"
                )));
            }
        }
        let mut next = self.clone();
        let order = &mut next.groups[group - 1];
        let cap = order.remove(from);
        order.insert(to, cap);
        Ok(next)
    }
}

/// Shuffles the interior of every group; endpoints stay pinned.
pub fn shuffle_arrangement(caps: &CapSet, seed: u64) -> HueArrangement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arrangement = caps.identity_arrangement();
    for order in &mut arrangement.groups {
        let n = order.len();
        order[1..n - 1].shuffle(&mut rng);
    }
    arrangement
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TesReport {
    /// Error per interior cap, keyed by true index.
    pub per_cap_error: BTreeMap<u16, u32>,
    pub per_group_tes: Vec<u32>,
    pub total: u32,
}

/// Total Error Score of an arrangement. Pinned caps act as neighbours but
/// get no score of their own; groups are scored independently.
pub fn score(arrangement: &HueArrangement) -> TesReport {
    let mut per_cap_error = BTreeMap::new();
    let mut per_group_tes = Vec::with_capacity(arrangement.groups.len());
    for order in &arrangement.groups {
        let mut group_total = 0u32;
        for w in order.windows(3) {
            let (prev, cap, next) = (w[0] as i64, w[1] as i64, w[2] as i64);
            let err = ((prev - cap).abs() + (next - cap).abs() - 2) as u32;
            per_cap_error.insert(w[1], err);
            group_total += err;
        }
        per_group_tes.push(group_total);
    }
    let total = per_group_tes.iter().sum();
    TesReport {
        per_cap_error,
        per_group_tes,
        total,
    }
}
