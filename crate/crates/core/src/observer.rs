//! Simulated observers for headless runs and convergence oracles.
//!
//! Levels are in staircase units with larger values easier to see, which
//! holds for both shipped configs (logMAR for acuity, letter darkness for
//! contrast).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::hue::{CapSet, HueArrangement};
use crate::{Error, Result};

/// Chance of naming one of four E orientations.
pub const TUMBLING_E_GUESS: f64 = 0.25;
/// Chance of naming both letters of a pair drawn from the 10 Sloan letters.
pub const SLOAN_PAIR_GUESS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObserverKind {
    Step,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObserverModel {
    pub kind: ObserverKind,
    pub true_threshold: f64,
    /// Logistic slope per level unit; ignored by step observers.
    pub slope: f64,
    pub guess_rate: f64,
    pub lapse_rate: f64,
}

impl ObserverModel {
    /// Deterministic step observer: always right above the threshold and
    /// always wrong at or below it.
    pub fn step(true_threshold: f64) -> Self {
        Self {
            kind: ObserverKind::Step,
            true_threshold,
            slope: 1.0,
            guess_rate: 0.0,
            lapse_rate: 0.0,
        }
    }

    pub fn logistic(true_threshold: f64, slope: f64) -> Self {
        Self {
            kind: ObserverKind::Logistic,
            true_threshold,
            slope,
            guess_rate: 0.0,
            lapse_rate: 0.0,
        }
    }

    pub fn with_guess(mut self, guess_rate: f64) -> Self {
        self.guess_rate = guess_rate;
        self
    }

    pub fn with_lapse(mut self, lapse_rate: f64) -> Self {
        self.lapse_rate = lapse_rate;
        self
    }

    pub fn shifted(mut self, by: f64) -> Self {
        self.true_threshold += by;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.true_threshold.is_finite() {
            return Err(Error::Config("observer threshold must be finite".into()));
        }
        if !(0.0..1.0).contains(&self.guess_rate) {
            return Err(Error::Config(format!("guess rate {} outside [0, 1)", self.guess_rate)));
        }
        if !(0.0..=0.1).contains(&self.lapse_rate) {
            return Err(Error::Config(format!("lapse rate {} outside [0, 0.1]", self.lapse_rate)));
        }
        if self.kind == ObserverKind::Logistic && !(self.slope > 0.0 && self.slope.is_finite()) {
            return Err(Error::Config(format!("logistic slope {} must be positive", self.slope)));
        }
        Ok(())
    }

    /// Probability of a correct response at `level`, always within
    /// `[guess_rate, 1 − lapse_rate]`.
    pub fn p_correct(&self, level: f64) -> f64 {
        let top = 1.0 - self.lapse_rate;
        match self.kind {
            ObserverKind::Step => {
                if level > self.true_threshold {
                    top
                } else {
                    self.guess_rate
                }
            }
            ObserverKind::Logistic => {
                let z = self.slope * (level - self.true_threshold);
                let sigmoid = 1.0 / (1.0 + (-z).exp());
                self.guess_rate + (top - self.guess_rate) * sigmoid
            }
        }
    }
}

/// `step:THRESHOLD` or `logistic:THRESHOLD:SLOPE`, optionally followed by
/// `:guess=G` and `:lapse=L`.
impl FromStr for ObserverModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("observer {s:?}: {why}"));
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default();
        let num = |p: Option<&str>, what: &str| -> Result<f64> {
            p.ok_or_else(|| bad(&format!("missing {what}")))?
                .parse::<f64>()
                .map_err(|_| bad(&format!("bad {what}")))
        };
        let mut model = match kind {
            "step" => Self::step(num(parts.next(), "threshold")?),
            "logistic" => {
                let t = num(parts.next(), "threshold")?;
                Self::logistic(t, num(parts.next(), "slope")?)
            }
            _ => return Err(bad("kind must be step or logistic")),
        };
        for extra in parts {
            match extra.split_once('=') {
                Some(("guess", v)) => model.guess_rate = v.parse().map_err(|_| bad("bad guess"))?,
                Some(("lapse", v)) => model.lapse_rate = v.parse().map_err(|_| bad("bad lapse"))?,
                _ => return Err(bad(&format!("unknown option {extra:?}"))),
            }
        }
        model.validate()?;
        Ok(model)
    }
}

impl fmt::Display for ObserverModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ObserverKind::Step => write!(f, "step:{}", self.true_threshold)?,
            ObserverKind::Logistic => write!(f, "logistic:{}:{}", self.true_threshold, self.slope)?,
        }
        if self.guess_rate != 0.0 {
            write!(f, ":guess={}", self.guess_rate)?;
        }
        if self.lapse_rate != 0.0 {
            write!(f, ":lapse={}", self.lapse_rate)?;
        }
        Ok(())
    }
}

/// An observer model with its own seeded random stream.
#[derive(Debug, Clone)]
pub struct Observer {
    model: ObserverModel,
    rng: ChaCha8Rng,
}

impl Observer {
    pub fn new(model: ObserverModel, seed: u64) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn model(&self) -> &ObserverModel {
        &self.model
    }

    pub fn p_correct(&self, level: f64) -> f64 {
        self.model.p_correct(level)
    }

    /// Bernoulli draw with the model's probability.
    pub fn respond(&mut self, level: f64) -> bool {
        let p = self.model.p_correct(level);
        self.rng.random::<f64>() < p
    }

    /// Uniform pick among `n` alternatives, used to fabricate a wrong answer.
    pub fn pick(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

/// Hue-arrangement observer: perceives each cap's position with Gaussian
/// noise of `noise_sd` cap steps and sorts each group's interior by the
/// perceived positions.
#[derive(Debug, Clone)]
pub struct HueObserver {
    noise_sd: f64,
    rng: ChaCha8Rng,
}

impl HueObserver {
    pub fn new(noise_sd: f64, seed: u64) -> Result<Self> {
        if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
            return Err(Error::Config(format!("hue noise {noise_sd} must be non-negative")));
        }
        Ok(Self {
            noise_sd,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// The arrangement this observer would settle on.
    pub fn arrange(&mut self, caps: &CapSet) -> HueArrangement {
        let normal = Normal::new(0.0, self.noise_sd.max(f64::MIN_POSITIVE)).expect("finite sd");
        let mut groups = Vec::new();
        for &(lo, hi) in caps.groups() {
            let mut interior: Vec<(f64, u16)> = (lo + 1..hi)
                .map(|i| {
                    let noise = if self.noise_sd > 0.0 { normal.sample(&mut self.rng) } else { 0.0 };
                    (i as f64 + noise, i)
                })
                .collect();
            interior.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut order = vec![lo];
            order.extend(interior.into_iter().map(|(_, i)| i));
            order.push(hi);
            groups.push(order);
        }
        HueArrangement::from_orders(groups)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::staircase::{StaircaseConfig, StaircaseState};

    #[test]
    fn p_correct_examples() {
        let step = ObserverModel::step(0.3);
        assert_eq!(step.p_correct(0.5), 1.0);
        assert_eq!(step.with_guess(0.25).p_correct(0.1), 0.25);
        let logistic = ObserverModel::logistic(0.3, 10.0).with_guess(0.25);
        assert!((logistic.p_correct(0.3) - 0.625).abs() < 1e-15);
        assert!(logistic.p_correct(1.0) > logistic.p_correct(0.0));
    }

    #[test]
    fn p_correct_bounded() {
        let m = ObserverModel::logistic(0.0, 30.0).with_guess(0.25).with_lapse(0.05);
        for i in -100..=100 {
            let p = m.p_correct(i as f64 / 10.0);
            assert!((0.25..=0.95).contains(&p));
        }
    }

    #[test]
    fn seeded_responses_repeat() {
        let m = ObserverModel::logistic(0.3, 8.0).with_guess(0.25);
        let mut a = Observer::new(m, 9).unwrap();
        let mut b = Observer::new(m, 9).unwrap();
        let ra: Vec<bool> = (0..500).map(|i| a.respond(i as f64 / 500.0)).collect();
        let rb: Vec<bool> = (0..500).map(|i| b.respond(i as f64 / 500.0)).collect();
        assert_eq!(ra, rb);
    }

    #[test]
    fn monte_carlo_accuracy() {
        let m = ObserverModel::logistic(0.3, 8.0).with_guess(0.25).with_lapse(0.02);
        let mut o = Observer::new(m, 1234).unwrap();
        let n = 100_000;
        let hits = (0..n).filter(|_| o.respond(0.35)).count();
        let p = m.p_correct(0.35);
        assert!((hits as f64 / n as f64 - p).abs() < 0.01);
    }

    #[test]
    fn step_without_lapse_is_deterministic() {
        let m = ObserverModel::step(0.3);
        for seed in 0..20 {
            let mut o = Observer::new(m, seed).unwrap();
            assert!(o.respond(0.31));
            assert!(!o.respond(0.3));
        }
    }

    #[test]
    fn parse_specs() {
        assert_eq!("step:0.3".parse::<ObserverModel>().unwrap(), ObserverModel::step(0.3));
        let m: ObserverModel = "logistic:0.1:12:guess=0.25:lapse=0.01".parse().unwrap();
        assert_eq!(m, ObserverModel::logistic(0.1, 12.0).with_guess(0.25).with_lapse(0.01));
        assert_eq!(m.to_string().parse::<ObserverModel>().unwrap(), m);
        assert!("step".parse::<ObserverModel>().is_err());
        assert!("quest:0.3".parse::<ObserverModel>().is_err());
        assert!("step:0.3:lapse=0.5".parse::<ObserverModel>().is_err());
    }

    #[test]
    fn step_observer_lands_within_half_bracket() {
        for t in [-0.5, -0.1, 0.0, 0.3, 0.77] {
            let mut o = Observer::new(ObserverModel::step(t), 0).unwrap();
            let mut s = StaircaseState::start(StaircaseConfig::acuity()).unwrap();
            while !s.is_terminated() {
                s = s.submit_response(o.respond(s.current_level())).unwrap();
            }
            assert!((s.threshold_estimate().unwrap() - t).abs() <= s.bracket_width() / 2.0);
        }
    }

    #[test]
    fn steeper_slope_reduces_estimate_variance() {
        let variance = |slope: f64| {
            let model = ObserverModel::logistic(0.3, slope).with_guess(TUMBLING_E_GUESS);
            let estimates: Vec<f64> = (0..1000u64)
                .map(|seed| {
                    let mut o = Observer::new(model, seed).unwrap();
                    let mut s = StaircaseState::start(StaircaseConfig::acuity()).unwrap();
                    while !s.is_terminated() {
                        s = s.submit_response(o.respond(s.current_level())).unwrap();
                    }
                    s.threshold_estimate().unwrap()
                })
                .collect();
            let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
            estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / estimates.len() as f64
        };
        let vars: Vec<f64> = [5.0, 20.0, 80.0].iter().map(|&s| variance(s)).collect();
        assert!(vars[0] > vars[1] && vars[1] > vars[2], "{vars:?}");
    }

    #[test]
    fn noiseless_hue_observer_sorts() {
        let caps = CapSet::standard();
        let mut o = HueObserver::new(0.0, 1).unwrap();
        assert_eq!(o.arrange(&caps), caps.identity_arrangement());
        let mut noisy = HueObserver::new(3.0, 1).unwrap();
        let a = noisy.arrange(&caps);
        a.validate(&caps).unwrap();
        assert!(crate::hue::score(&a).total > 0);
    }
}
