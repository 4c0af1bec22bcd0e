//! Display calibration: grayscale→luminance fits, Weber contrast of a
//! rendered letter, and optotype size on a physical screen.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::metrics::{object_size_for_angle, visual_angle, weber_contrast, VisualAngle};
use crate::{Error, Result};

pub const PROFILE_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_FIT_DEGREE: usize = 4;
pub const MAX_FIT_DEGREE: usize = 8;

/// Grid cells across the tumbling E; the gap is one cell.
pub const OPTOTYPE_GRID: f64 = 5.0;

const MM_PER_INCH: f64 = 25.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplayGeometry {
    pub width_px: u32,
    pub height_px: u32,
    pub pixel_pitch_mm: f64,
    pub viewing_distance_mm: f64,
}

impl DisplayGeometry {
    pub fn new(width_px: u32, height_px: u32, pixel_pitch_mm: f64, viewing_distance_mm: f64) -> Result<Self> {
        let g = Self {
            width_px,
            height_px,
            pixel_pitch_mm,
            viewing_distance_mm,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn from_ppi(width_px: u32, height_px: u32, ppi: f64, viewing_distance_mm: f64) -> Result<Self> {
        if !(ppi > 0.0) {
            return Err(Error::Config(format!("pixels per inch must be positive, got {ppi}")));
        }
        Self::new(width_px, height_px, MM_PER_INCH / ppi, viewing_distance_mm)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.width_px > 0
            && self.height_px > 0
            && self.pixel_pitch_mm > 0.0
            && self.pixel_pitch_mm.is_finite()
            && self.viewing_distance_mm > 0.0
            && self.viewing_distance_mm.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("display geometry must be strictly positive: {self:?}")))
        }
    }

    pub fn ppi(&self) -> f64 {
        MM_PER_INCH / self.pixel_pitch_mm
    }

    fn max_letter_px(&self) -> f64 {
        self.width_px.min(self.height_px) as f64
    }
}

/// One luminance-meter reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LuminanceSample {
    /// Normalized grayscale in [0, 1].
    pub grayscale: f64,
    pub luminance_cd_m2: f64,
}

/// Polynomial `L(g) = Σ cᵢ gⁱ` on normalized grayscale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LuminanceCurve {
    /// Ascending powers of grayscale, cd/m².
    pub coefficients: Vec<f64>,
    pub fit_degree: usize,
    pub residual_rms_cd_m2: f64,
    pub background_luminance_cd_m2: f64,
    /// Set when the fitted polynomial dips below zero somewhere on [0, 1].
    pub negative_luminance_warning: bool,
    /// Relative precision of the meter that produced the samples, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meter_precision: Option<f64>,
}

impl LuminanceCurve {
    pub fn evaluate(&self, g: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * g + c)
    }
}

/// Ordinary least-squares polynomial fit of luminance against grayscale.
pub fn fit_luminance_curve(samples: &[LuminanceSample], degree: usize) -> Result<LuminanceCurve> {
    if !(1..=MAX_FIT_DEGREE).contains(&degree) {
        return Err(Error::Fit(format!("degree must lie in 1..={MAX_FIT_DEGREE}, got {degree}")));
    }
    if samples.len() < degree + 1 {
        return Err(Error::Fit(format!(
            "degree {degree} needs at least {} samples, got {}",
            degree + 1,
            samples.len()
        )));
    }
    for s in samples {
        if !(0.0..=1.0).contains(&s.grayscale) || !s.luminance_cd_m2.is_finite() {
            return Err(Error::Fit(format!("sample out of range: {s:?}")));
        }
    }
    let mut xs: Vec<f64> = samples.iter().map(|s| s.grayscale).collect();
    xs.sort_by(f64::total_cmp);
    if xs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Fit("grayscale values must be distinct".into()));
    }

    let design = DMatrix::from_fn(samples.len(), degree + 1, |r, c| samples[r].grayscale.powi(c as i32));
    let target = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.luminance_cd_m2));
    let svd = design.clone().svd(true, true);
    let largest = svd.singular_values.max();
    let rank_tol = largest * 1e-12 * samples.len() as f64;
    if svd.rank(rank_tol) < degree + 1 {
        return Err(Error::Fit("design matrix is rank deficient".into()));
    }
    let coeffs = svd
        .solve(&target, rank_tol)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let residuals = &design * &coeffs - &target;
    let residual_rms = (residuals.norm_squared() / samples.len() as f64).sqrt();

    let mut curve = LuminanceCurve {
        coefficients: coeffs.iter().copied().collect(),
        fit_degree: degree,
        residual_rms_cd_m2: residual_rms,
        background_luminance_cd_m2: 0.0,
        negative_luminance_warning: false,
        meter_precision: None,
    };
    curve.background_luminance_cd_m2 = curve.evaluate(1.0);
    if !(curve.background_luminance_cd_m2 > 0.0) {
        return Err(Error::Fit(format!(
            "fitted background luminance {} is not positive",
            curve.background_luminance_cd_m2
        )));
    }
    let floor = -1e-9 * curve.background_luminance_cd_m2;
    curve.negative_luminance_warning = (0..=1000).any(|i| curve.evaluate(i as f64 / 1000.0) < floor);
    Ok(curve)
}

/// Signed Weber contrast of a letter drawn at grayscale `g` on the full-white background.
pub fn grayscale_to_weber(g: f64, curve: &LuminanceCurve) -> Result<f64> {
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::Domain(format!("grayscale must lie in [0, 1], got {g}")));
    }
    if g == 1.0 {
        return Ok(0.0);
    }
    weber_contrast(curve.evaluate(g).max(0.0), curve.background_luminance_cd_m2)
}

/// Letter height in pixels for a tumbling E at `target_logmar`.
///
/// The gap subtends `10^logMAR` arcmin; the whole letter is five gaps tall.
pub fn optotype_pixel_height(target_logmar: f64, geometry: &DisplayGeometry) -> Result<f64> {
    geometry.validate()?;
    if !target_logmar.is_finite() {
        return Err(Error::Domain(format!("logMAR must be finite, got {target_logmar}")));
    }
    let letter = VisualAngle::from_arcmin(OPTOTYPE_GRID * 10f64.powf(target_logmar))?;
    let height_mm = object_size_for_angle(letter, geometry.viewing_distance_mm)?;
    let px = height_mm / geometry.pixel_pitch_mm;
    if px > geometry.max_letter_px() {
        return Err(Error::Domain(format!(
            "letter of {px:.1} px at logMAR {target_logmar} exceeds the {} px display extent",
            geometry.max_letter_px()
        )));
    }
    Ok(px)
}

/// logMAR of the smallest letter that is at least `min_letter_pixels` tall.
pub fn min_renderable_logmar(geometry: &DisplayGeometry, min_letter_pixels: u32) -> Result<f64> {
    geometry.validate()?;
    if min_letter_pixels < OPTOTYPE_GRID as u32 {
        return Err(Error::Domain(format!(
            "a {OPTOTYPE_GRID}x{OPTOTYPE_GRID} optotype needs at least {OPTOTYPE_GRID} pixels, got {min_letter_pixels}"
        )));
    }
    let height_mm = min_letter_pixels as f64 * geometry.pixel_pitch_mm;
    let letter = visual_angle(height_mm, geometry.viewing_distance_mm)?;
    Ok((letter.arcmin() / OPTOTYPE_GRID).log10())
}

/// Everything needed to turn staircase levels into physical stimuli.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationProfile {
    pub format_version: u32,
    pub id: String,
    pub geometry: DisplayGeometry,
    pub curve: LuminanceCurve,
    /// Floor computed from geometry for `min_letter_pixels`.
    pub computed_min_logmar: f64,
    /// Floor measured on the device in pilot testing; overrides the computed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_min_logmar: Option<f64>,
    pub min_letter_pixels: u32,
    /// Screen brightness as a fraction of maximum.
    pub brightness_setting: f64,
}

impl CalibrationProfile {
    pub fn new(id: impl Into<String>, geometry: DisplayGeometry, curve: LuminanceCurve, min_letter_pixels: u32) -> Result<Self> {
        let computed = min_renderable_logmar(&geometry, min_letter_pixels)?;
        Ok(Self {
            format_version: PROFILE_FORMAT_VERSION,
            id: id.into(),
            geometry,
            curve,
            computed_min_logmar: computed,
            measured_min_logmar: None,
            min_letter_pixels,
            brightness_setting: 1.0,
        })
    }

    pub fn with_measured_min_logmar(mut self, logmar: f64) -> Self {
        self.measured_min_logmar = Some(logmar);
        self
    }

    /// The floor in effect: measured if present, otherwise computed.
    pub fn min_renderable_logmar(&self) -> f64 {
        self.measured_min_logmar.unwrap_or(self.computed_min_logmar)
    }

    /// Phone-at-1-m reference: 2960×1440 at 523 ppi, 100 % brightness, with
    /// the −0.62 logMAR floor measured on that setup. The luminance curve is
    /// a degree-4 fit to a synthetic gamma-2.2 panel (0.5 to 420 cd/m²)
    /// until real meter readings replace it.
    pub fn reference() -> Self {
        let geometry = DisplayGeometry::from_ppi(2960, 1440, 523.0, 1000.0).expect("valid geometry");
        let samples = synthetic_gamma_samples(0.5, 420.0, 2.2, 18);
        let curve = fit_luminance_curve(&samples, DEFAULT_FIT_DEGREE).expect("well-posed fit");
        Self::new("reference", geometry, curve, 5)
            .expect("valid profile")
            .with_measured_min_logmar(-0.62)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != PROFILE_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported calibration format version {}",
                self.format_version
            )));
        }
        if self.id.trim().is_empty() {
            return Err(Error::Config("calibration id is empty".into()));
        }
        self.geometry.validate()?;
        if !self.min_renderable_logmar().is_finite() {
            return Err(Error::Config("minimum renderable logMAR must be finite".into()));
        }
        if !(self.curve.background_luminance_cd_m2 > 0.0) {
            return Err(Error::Config("background luminance must be positive".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let profile: Self = serde_json::from_str(text)?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }
}

/// `n` evenly spaced readings of `black + (peak − black)·g^gamma`.
pub fn synthetic_gamma_samples(black: f64, peak: f64, gamma: f64, n: usize) -> Vec<LuminanceSample> {
    (0..n)
        .map(|i| {
            let g = i as f64 / (n - 1) as f64;
            LuminanceSample {
                grayscale: g,
                luminance_cd_m2: black + (peak - black) * g.powf(gamma),
            }
        })
        .collect()
}

/// How grayscale values in a sample file are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrayscaleScale {
    Unit,
    Byte,
    /// Byte scale if any value exceeds 1, unit otherwise.
    Auto,
}

/// Parses two-column luminance readings (`grayscale luminance`, whitespace
/// or comma separated, `#` comments). Grayscale is 0–1 or 0–255.
pub fn parse_luminance_samples(text: &str, scale: GrayscaleScale) -> Result<Vec<LuminanceSample>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let parsed: Vec<f64> = fields.iter().filter_map(|f| f.parse().ok()).collect();
        if fields.len() != 2 || parsed.len() != 2 {
            // A non-numeric first row is a header.
            if rows.is_empty() && parsed.is_empty() {
                continue;
            }
            return Err(Error::Parse(format!(
                "line {}: expected two numeric columns (grayscale, cd/m2)",
                lineno + 1
            )));
        }
        rows.push((parsed[0], parsed[1]));
    }
    let byte = match scale {
        GrayscaleScale::Unit => false,
        GrayscaleScale::Byte => true,
        GrayscaleScale::Auto => rows.iter().any(|(g, _)| *g > 1.0),
    };
    let divisor = if byte { 255.0 } else { 1.0 };
    let samples: Vec<LuminanceSample> = rows
        .into_iter()
        .map(|(g, l)| LuminanceSample {
            grayscale: g / divisor,
            luminance_cd_m2: l,
        })
        .collect();
    if let Some(s) = samples.iter().find(|s| !(0.0..=1.0).contains(&s.grayscale) || s.luminance_cd_m2 < 0.0) {
        return Err(Error::Parse(format!("sample out of range: {s:?}")));
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cubic_samples() -> Vec<LuminanceSample> {
        (0..=10)
            .map(|i| {
                let g = i as f64 / 10.0;
                LuminanceSample {
                    grayscale: g,
                    luminance_cd_m2: 2.2 * g.powi(3),
                }
            })
            .collect()
    }

    fn phone() -> DisplayGeometry {
        DisplayGeometry::from_ppi(2960, 1440, 523.0, 1000.0).unwrap()
    }

    #[test]
    fn recovers_cubic() {
        let curve = fit_luminance_curve(&cubic_samples(), 3).unwrap();
        for (got, want) in curve.coefficients.iter().zip([0.0, 0.0, 0.0, 2.2]) {
            assert!((got - want).abs() < 1e-6, "{:?}", curve.coefficients);
        }
        assert!(curve.residual_rms_cd_m2 < 1e-9);
        assert!((curve.background_luminance_cd_m2 - 2.2).abs() < 1e-9);
        assert!(!curve.negative_luminance_warning);
    }

    #[test]
    fn constant_samples_have_zero_slope() {
        let s: Vec<_> = (0..5)
            .map(|i| LuminanceSample { grayscale: i as f64 / 4.0, luminance_cd_m2: 80.0 })
            .collect();
        let curve = fit_luminance_curve(&s, 1).unwrap();
        assert!(curve.coefficients[1].abs() < 1e-9);
        assert!((curve.coefficients[0] - 80.0).abs() < 1e-9);
    }

    #[test]
    fn fit_preconditions() {
        let three = &cubic_samples()[..3];
        assert!(matches!(fit_luminance_curve(three, 4), Err(Error::Fit(_))));
        assert!(fit_luminance_curve(&cubic_samples(), 0).is_err());
        assert!(fit_luminance_curve(&cubic_samples(), 9).is_err());
        let mut dup = cubic_samples();
        dup[1].grayscale = dup[0].grayscale;
        assert!(fit_luminance_curve(&dup, 2).is_err());
    }

    #[test]
    fn negative_dip_is_flagged() {
        let s = [(0.0, 5.0), (0.25, -3.0), (0.5, 1.0), (1.0, 50.0)]
            .map(|(g, l)| LuminanceSample { grayscale: g, luminance_cd_m2: l });
        let curve = fit_luminance_curve(&s, 3).unwrap();
        assert!(curve.negative_luminance_warning);
    }

    #[test]
    fn weber_examples() {
        let curve = fit_luminance_curve(&cubic_samples(), 3).unwrap();
        assert_eq!(grayscale_to_weber(1.0, &curve).unwrap(), 0.0);
        let linear = LuminanceCurve {
            coefficients: vec![0.5, 99.5],
            fit_degree: 1,
            residual_rms_cd_m2: 0.0,
            background_luminance_cd_m2: 100.0,
            negative_luminance_warning: false,
            meter_precision: None,
        };
        assert!((grayscale_to_weber(0.0, &linear).unwrap() + 0.995).abs() < 1e-12);
        assert!(grayscale_to_weber(1.5, &linear).is_err());
    }

    #[test]
    fn weber_monotone_for_monotone_curve() {
        let s: Vec<_> = (0..=12)
            .map(|i| {
                let g = i as f64 / 12.0;
                LuminanceSample { grayscale: g, luminance_cd_m2: 0.4 + 30.0 * g + 250.0 * g.powi(3) }
            })
            .collect();
        let curve = fit_luminance_curve(&s, 4).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=1000 {
            let w = grayscale_to_weber(i as f64 / 1000.0, &curve).unwrap();
            assert!(w >= prev - 1e-12, "{i}: {w} < {prev}");
            prev = w;
        }
    }

    #[test]
    fn optotype_examples() {
        let mut g = phone();
        let h = optotype_pixel_height(1.0, &g).unwrap() * g.pixel_pitch_mm;
        // mpmath: 14.54466683...
        assert!((h - 14.544).abs() < 0.01);
        let h0 = optotype_pixel_height(0.0, &g).unwrap() * g.pixel_pitch_mm;
        assert!((h0 - 1.454_441_3).abs() < 1e-6);
        g.viewing_distance_mm = 2000.0;
        let h2 = optotype_pixel_height(0.0, &g).unwrap() * g.pixel_pitch_mm;
        assert!((h2 / h0 - 2.0).abs() < 1e-3);
    }

    #[test]
    fn oversized_letter_rejected() {
        let g = DisplayGeometry::new(100, 100, 0.1, 1000.0).unwrap();
        assert!(optotype_pixel_height(2.0, &g).is_err());
    }

    #[test]
    fn min_logmar_examples() {
        let g = phone();
        let m = min_renderable_logmar(&g, 5).unwrap();
        // mpmath: -0.77739409...
        assert!((m + 0.777_394_09).abs() < 1e-6);
        assert!((m + 0.78).abs() < 0.005);
        let mut half = g;
        half.viewing_distance_mm /= 2.0;
        let m_half = min_renderable_logmar(&half, 5).unwrap();
        assert!((m_half - m - 2f64.log10()).abs() < 1e-6);
        assert!(min_renderable_logmar(&g, 4).is_err());
    }

    #[test]
    fn reference_profile_keeps_both_floors() {
        let p = CalibrationProfile::reference();
        assert_eq!(p.min_renderable_logmar(), -0.62);
        assert!((p.computed_min_logmar + 0.7774).abs() < 1e-3);
        p.validate().unwrap();
        let back = CalibrationProfile::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn profile_rejects_unknown_fields() {
        let text = CalibrationProfile::reference().to_json().unwrap();
        let tampered = text.replacen("\"id\"", "\"bogus\": 1, \"id\"", 1);
        assert!(CalibrationProfile::from_json(&tampered).is_err());
    }

    #[test]
    fn parse_samples_scales() {
        let text = "grayscale,luminance\n0, 0.5\n128, 90\n255 400\n";
        let s = parse_luminance_samples(text, GrayscaleScale::Auto).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[2].grayscale, 1.0);
        let unit = parse_luminance_samples("# g L\n0 1\n0.5 2\n1 3\n", GrayscaleScale::Auto).unwrap();
        assert_eq!(unit[1].grayscale, 0.5);
        assert!(parse_luminance_samples("0 1 2\n", GrayscaleScale::Auto).is_err());
        assert!(parse_luminance_samples("300 1\n", GrayscaleScale::Byte).is_err());
    }

    proptest! {
        #[test]
        fn fit_reproduces_samples(coeffs in proptest::collection::vec(0.0f64..50.0, 2..5), noise in proptest::collection::vec(-1.0f64..1.0, 12)) {
            let samples: Vec<LuminanceSample> = noise.iter().enumerate().map(|(i, n)| {
                let g = i as f64 / 11.0;
                let l: f64 = coeffs.iter().enumerate().map(|(p, c)| c * g.powi(p as i32)).sum();
                LuminanceSample { grayscale: g, luminance_cd_m2: l + 1.0 + n }
            }).collect();
            let curve = fit_luminance_curve(&samples, coeffs.len() - 1).unwrap();
            for s in &samples {
                let r = (curve.evaluate(s.grayscale) - s.luminance_cd_m2).abs();
                prop_assert!(r <= curve.residual_rms_cd_m2 * (samples.len() as f64).sqrt() + 1e-9);
            }
        }

        #[test]
        fn optotype_height_increasing(a in -0.7f64..1.0, b in -0.7f64..1.0, d in 300.0f64..2000.0) {
            prop_assume!(a < b);
            let mut g = phone();
            g.viewing_distance_mm = d;
            prop_assert!(optotype_pixel_height(a, &g).unwrap() < optotype_pixel_height(b, &g).unwrap());
            let mut far = g;
            far.viewing_distance_mm = d * 1.5;
            prop_assert!(optotype_pixel_height(a, &g).unwrap() < optotype_pixel_height(a, &far).unwrap());
        }
    }
}
