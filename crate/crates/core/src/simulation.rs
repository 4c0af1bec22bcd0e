//! Headless benchmark cohorts driven by simulated observers.
//!
//! Participants are split across light levels in rotation (participant `p`
//! sits in light `p mod L`), and each participant's plan is counterbalanced
//! by their index within that light group. Every participant carries a
//! personal offset that applies to all devices alike, so that paired
//! comparisons between devices see consistent individual differences.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationProfile;
use crate::observer::{HueObserver, Observer, ObserverModel};
use crate::session::{
    build_plan, run_session, Condition, InMemory, LightLevel, ManualClock, Session, SimulatedDevice, SimulatedSource,
    TestKind,
};
use crate::stats::analysis::ResultRow;
use crate::{Error, Result};

/// Wall-clock origin stamped on simulated events (2024-01-01T00:00:00Z).
const SIM_WALL_ORIGIN_MS: u64 = 1_704_067_200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub label: String,
    /// Level units: logMAR.
    pub acuity: ObserverModel,
    /// Level units: letter darkness.
    pub contrast: ObserverModel,
    /// Perceptual noise of the hue observer, in cap steps.
    pub hue_noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightSpec {
    pub light: LightLevel,
    pub acuity_shift: f64,
    pub contrast_shift: f64,
    pub hue_noise_scale: f64,
}

impl LightSpec {
    pub fn neutral(light: LightLevel) -> Self {
        Self {
            light,
            acuity_shift: 0.0,
            contrast_shift: 0.0,
            hue_noise_scale: 1.0,
        }
    }
}

/// Between-participant spread, shared across devices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipantJitter {
    pub acuity_sd: f64,
    pub contrast_sd: f64,
    /// Standard deviation of the log hue-noise multiplier.
    pub hue_log_sd: f64,
}

impl ParticipantJitter {
    pub const NONE: Self = Self {
        acuity_sd: 0.0,
        contrast_sd: 0.0,
        hue_log_sd: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub devices: Vec<DeviceSpec>,
    pub lights: Vec<LightSpec>,
    pub participants: u32,
    pub seed: u64,
    pub jitter: ParticipantJitter,
    /// Simulated time per staircase trial.
    pub trial_ms: u64,
    /// Simulated time to arrange the hue board.
    pub hue_ms: u64,
}

impl SimulationConfig {
    /// Four devices under two light levels with 24 participants. The
    /// `worst-headset` device is constructed to trail every other condition
    /// on all three metrics.
    pub fn default_benchmark(seed: u64) -> Self {
        let device = |label: &str, acuity: f64, contrast: f64, hue: f64| DeviceSpec {
            label: label.into(),
            acuity: ObserverModel::step(acuity),
            contrast: ObserverModel::step(contrast),
            hue_noise_sd: hue,
        };
        Self {
            devices: vec![
                device("naked-eyes", -0.05, 0.03, 0.5),
                device("headset-a", 0.12, 0.07, 1.0),
                device("headset-b", 0.25, 0.12, 1.6),
                device("worst-headset", 0.55, 0.35, 6.0),
            ],
            lights: vec![
                LightSpec::neutral(LightLevel::normal()),
                LightSpec {
                    light: LightLevel::low(),
                    acuity_shift: 0.06,
                    contrast_shift: 0.02,
                    hue_noise_scale: 1.3,
                },
            ],
            participants: 24,
            seed,
            jitter: ParticipantJitter {
                acuity_sd: 0.05,
                contrast_sd: 0.006,
                hue_log_sd: 0.15,
            },
            trial_ms: 3_000,
            hue_ms: 360_000,
        }
    }

    /// One device per observer model, used for both staircase tests, under
    /// a single normal light and without participant jitter.
    pub fn from_observers(models: &[ObserverModel], participants: u32, seed: u64) -> Self {
        Self {
            devices: models
                .iter()
                .enumerate()
                .map(|(i, m)| DeviceSpec {
                    label: format!("device-{}", i + 1),
                    acuity: *m,
                    contrast: *m,
                    hue_noise_sd: 1.0,
                })
                .collect(),
            lights: vec![LightSpec::neutral(LightLevel::normal())],
            participants,
            seed,
            jitter: ParticipantJitter::NONE,
            trial_ms: 3_000,
            hue_ms: 360_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.devices.is_empty() || self.lights.is_empty() {
            return Err(Error::Config("simulation needs at least one device and one light".into()));
        }
        for d in &self.devices {
            d.acuity.validate()?;
            d.contrast.validate()?;
            if !(d.hue_noise_sd >= 0.0) {
                return Err(Error::Config(format!("{}: hue_noise_sd must be non-negative", d.label)));
            }
        }
        for l in &self.lights {
            l.light.validate()?;
            if !(l.hue_noise_scale > 0.0) {
                return Err(Error::Config("hue_noise_scale must be positive".into()));
            }
        }
        let j = self.jitter;
        if !(j.acuity_sd >= 0.0 && j.contrast_sd >= 0.0 && j.hue_log_sd >= 0.0) {
            return Err(Error::Config("jitter spreads must be non-negative".into()));
        }
        let mut labels: Vec<&str> = self.devices.iter().map(|d| d.label.as_str()).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.devices.len() {
            return Err(Error::Config("device labels must be unique".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub sessions: Vec<Session>,
    pub results: Vec<ResultRow>,
}

impl SimulationOutput {
    pub fn trials(&self) -> Vec<crate::session::TrialRecord> {
        self.sessions.iter().flat_map(|s| s.trials().iter().cloned()).collect()
    }
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    // Odd multipliers keep distinct (a, b) pairs apart before seeding.
    seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

/// Runs every participant's full session.
pub fn simulate(config: &SimulationConfig, calibration: &CalibrationProfile) -> Result<SimulationOutput> {
    config.validate()?;
    let n_lights = config.lights.len() as u32;
    let mut sessions = Vec::with_capacity(config.participants as usize);
    let mut results = Vec::new();
    for p in 0..config.participants {
        let light = &config.lights[(p % n_lights) as usize];
        let conditions: Vec<Condition> = config
            .devices
            .iter()
            .map(|d| Condition::new(d.label.clone(), light.light.clone()))
            .collect::<Result<_>>()?;
        let mut plan = build_plan(p / n_lights, &conditions, &TestKind::ALL, mix(config.seed, p as u64, 1), &calibration.id)?;
        plan.participant_id = format!("P{:03}", p + 1);

        let mut rng = ChaCha8Rng::seed_from_u64(mix(config.seed, p as u64, 2));
        let draw = |sd: f64, rng: &mut ChaCha8Rng| {
            if sd > 0.0 {
                Normal::new(0.0, sd).expect("positive sd").sample(rng)
            } else {
                0.0
            }
        };
        let acuity_offset = draw(config.jitter.acuity_sd, &mut rng) + light.acuity_shift;
        let contrast_offset = draw(config.jitter.contrast_sd, &mut rng) + light.contrast_shift;
        let hue_scale = draw(config.jitter.hue_log_sd, &mut rng).exp() * light.hue_noise_scale;

        let mut devices = BTreeMap::new();
        for (i, d) in config.devices.iter().enumerate() {
            let s = mix(config.seed, p as u64, 100 + 3 * i as u64);
            let contrast = d.contrast.shifted(contrast_offset);
            devices.insert(
                d.label.clone(),
                SimulatedDevice {
                    acuity: Observer::new(d.acuity.shifted(acuity_offset), s)?,
                    contrast: Observer::new(contrast, s + 1)?,
                    hue: HueObserver::new(d.hue_noise_sd * hue_scale, s + 2)?,
                },
            );
        }
        let mut source = SimulatedSource::new(devices, config.trial_ms, config.hue_ms);
        let clock = ManualClock::new(0, SIM_WALL_ORIGIN_MS);
        let id = format!("sim-{}-{:03}", config.seed, p + 1);
        let mut session = Session::create(id, plan, calibration.clone(), &clock, &mut InMemory)?;
        let result = run_session(&mut session, &mut source, &clock, &mut InMemory)?;
        results.extend(result.result_rows());
        sessions.push(session);
    }
    Ok(SimulationOutput { sessions, results })
}
