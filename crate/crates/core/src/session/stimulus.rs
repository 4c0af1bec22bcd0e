use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::plan::TestKind;
use crate::calibration::{grayscale_to_weber, optotype_pixel_height, CalibrationProfile};
use crate::hue::{CapSet, HueArrangement};
use crate::Result;

/// Sloan letters are drawn at this acuity size in the contrast test.
pub const CONTRAST_LETTER_LOGMAR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Up,
    Down,
    Left,
    Right,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [Orientation::Up, Orientation::Down, Orientation::Left, Orientation::Right];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SloanLetter {
    C,
    D,
    H,
    K,
    N,
    O,
    R,
    S,
    V,
    Z,
}

impl SloanLetter {
    pub const ALL: [SloanLetter; 10] = [
        SloanLetter::C,
        SloanLetter::D,
        SloanLetter::H,
        SloanLetter::K,
        SloanLetter::N,
        SloanLetter::O,
        SloanLetter::R,
        SloanLetter::S,
        SloanLetter::V,
        SloanLetter::Z,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HueCapView {
    pub true_index: u16,
    /// Linear RGB in [0, 1].
    pub color: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum StimulusBody {
    Acuity {
        level_logmar: f64,
        orientation: Orientation,
        /// Letter height in device pixels.
        pixel_height: f64,
    },
    Contrast {
        /// Letter darkness, 1 − grayscale.
        level: f64,
        grayscale: f64,
        weber_contrast: f64,
        letters: [SloanLetter; 2],
        pixel_height: f64,
    },
    Hue {
        /// Current board, one list of true cap indices per group.
        arrangement: Vec<Vec<u16>>,
        caps: Vec<HueCapView>,
        min_duration_ms: u64,
    },
}

/// What the console shows for the pending trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusDescriptor {
    pub seq: u64,
    pub condition_index: usize,
    #[serde(flatten)]
    pub body: StimulusBody,
}

impl StimulusDescriptor {
    pub fn test(&self) -> TestKind {
        match self.body {
            StimulusBody::Acuity { .. } => TestKind::Acuity,
            StimulusBody::Contrast { .. } => TestKind::Contrast,
            StimulusBody::Hue { .. } => TestKind::Hue,
        }
    }

    /// Staircase level, absent for the hue board.
    pub fn level(&self) -> Option<f64> {
        match self.body {
            StimulusBody::Acuity { level_logmar, .. } => Some(level_logmar),
            StimulusBody::Contrast { level, .. } => Some(level),
            StimulusBody::Hue { .. } => None,
        }
    }
}

/// Operator input for the pending stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Response {
    /// Operator scored the trial directly.
    Judged { correct: bool },
    Orientation { orientation: Orientation },
    Letters { letters: [SloanLetter; 2] },
    /// Move within a group; `group` is 1-based, positions 0-based.
    HueMove { group: usize, from: usize, to: usize },
    /// Replace the whole board.
    HueArrange { groups: Vec<Vec<u16>> },
    HueSubmit {},
}

/// Seed for one stimulus, mixed from the plan seed and its coordinates.
pub(crate) fn stimulus_seed(seed: u64, condition_index: usize, test: TestKind, seq: u64) -> u64 {
    let mut h = splitmix(seed);
    for v in [condition_index as u64, test as u64, seq] {
        h = splitmix(h ^ v);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn acuity_stimulus(seed: u64, profile: &CalibrationProfile, level: f64) -> Result<StimulusBody> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(StimulusBody::Acuity {
        level_logmar: level,
        orientation: Orientation::ALL[rng.random_range(0..4)],
        pixel_height: optotype_pixel_height(level, &profile.geometry)?,
    })
}

pub(crate) fn contrast_stimulus(seed: u64, profile: &CalibrationProfile, level: f64) -> Result<StimulusBody> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grayscale = (1.0 - level).clamp(0.0, 1.0);
    Ok(StimulusBody::Contrast {
        level,
        grayscale,
        weber_contrast: grayscale_to_weber(grayscale, &profile.curve)?,
        letters: [
            SloanLetter::ALL[rng.random_range(0..10)],
            SloanLetter::ALL[rng.random_range(0..10)],
        ],
        pixel_height: optotype_pixel_height(CONTRAST_LETTER_LOGMAR, &profile.geometry)?,
    })
}

pub(crate) fn hue_stimulus(caps: &CapSet, arrangement: &HueArrangement, min_duration_ms: u64) -> StimulusBody {
    StimulusBody::Hue {
        arrangement: arrangement.groups().to_vec(),
        caps: caps
            .caps()
            .iter()
            .map(|c| HueCapView {
                true_index: c.true_index,
                color: c.color,
            })
            .collect(),
        min_duration_ms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_by_coordinate() {
        let base = stimulus_seed(7, 0, TestKind::Acuity, 1);
        assert_eq!(base, stimulus_seed(7, 0, TestKind::Acuity, 1));
        assert_ne!(base, stimulus_seed(7, 0, TestKind::Acuity, 2));
        assert_ne!(base, stimulus_seed(7, 1, TestKind::Acuity, 1));
        assert_ne!(base, stimulus_seed(7, 0, TestKind::Contrast, 1));
        assert_ne!(base, stimulus_seed(8, 0, TestKind::Acuity, 1));
    }

    #[test]
    fn acuity_height_matches_calibration() {
        let p = CalibrationProfile::reference();
        let StimulusBody::Acuity { pixel_height, .. } = acuity_stimulus(1, &p, 0.3).unwrap() else {
            panic!()
        };
        assert_eq!(pixel_height, optotype_pixel_height(0.3, &p.geometry).unwrap());
    }

    #[test]
    fn orientations_cover_all_four() {
        let p = CalibrationProfile::reference();
        let mut seen = std::collections::BTreeSet::new();
        for s in 0..64 {
            if let StimulusBody::Acuity { orientation, .. } = acuity_stimulus(stimulus_seed(3, 0, TestKind::Acuity, s), &p, 0.5).unwrap() {
                seen.insert(format!("{orientation:?}"));
            }
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn json_shapes() {
        let d = StimulusDescriptor {
            seq: 3,
            condition_index: 0,
            body: StimulusBody::Acuity {
                level_logmar: 0.5,
                orientation: Orientation::Left,
                pixel_height: 12.0,
            },
        };
        let v = serde_json::to_value(&d).unwrap();
        assert_eq!(v["test"], "acuity");
        assert_eq!(v["orientation"], "left");
        let back: StimulusDescriptor = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);

        let r: Response = serde_json::from_str(r#"{"type":"letters","letters":["C","Z"]}"#).unwrap();
        assert_eq!(r, Response::Letters { letters: [SloanLetter::C, SloanLetter::Z] });
        assert!(serde_json::from_str::<Response>(r#"{"type":"hue_submit","extra":1}"#).is_err());
    }
}
