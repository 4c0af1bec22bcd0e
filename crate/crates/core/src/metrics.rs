//! Acuity, contrast and color-vision score conversions.
//!
//! Everything here is a pure function over plain values. Lengths are in
//! millimetres, luminances in cd/m², angles in degrees or arcminutes as the
//! field names say.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Snellen numerator used for every [`AcuityResult`] (imperial 20 ft chart).
pub const SNELLEN_NUMERATOR: u32 = 20;

/// Angle subtended at the eye.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisualAngle {
    degrees: f64,
    arcmin: f64,
}

impl VisualAngle {
    pub fn from_degrees(degrees: f64) -> Result<Self> {
        if !(0.0..180.0).contains(&degrees) {
            return Err(Error::Domain(format!(
                "visual angle must lie in [0, 180) degrees, got {degrees}"
            )));
        }
        Ok(Self {
            degrees,
            arcmin: degrees * 60.0,
        })
    }

    pub fn from_arcmin(arcmin: f64) -> Result<Self> {
        Self::from_degrees(arcmin / 60.0)
    }

    pub fn degrees(&self) -> f64 {
        self.degrees
    }

    pub fn arcmin(&self) -> f64 {
        self.arcmin
    }

    pub fn radians(&self) -> f64 {
        self.degrees.to_radians()
    }
}

/// Angle subtended by an object of `object_size_mm` seen from
/// `object_distance_mm`: `2·atan((size/2)/distance)`.
pub fn visual_angle(object_size_mm: f64, object_distance_mm: f64) -> Result<VisualAngle> {
    if !(object_distance_mm > 0.0) || !object_distance_mm.is_finite() {
        return Err(Error::Domain(format!(
            "object distance must be positive, got {object_distance_mm}"
        )));
    }
    if !(object_size_mm >= 0.0) || !object_size_mm.is_finite() {
        return Err(Error::Domain(format!(
            "object size must be non-negative, got {object_size_mm}"
        )));
    }
    let rad = 2.0 * ((object_size_mm / 2.0) / object_distance_mm).atan();
    VisualAngle::from_degrees(rad.to_degrees())
}

/// Physical size that subtends `angle` at `distance_mm` (inverse of [`visual_angle`]).
pub fn object_size_for_angle(angle: VisualAngle, distance_mm: f64) -> Result<f64> {
    if !(distance_mm > 0.0) || !distance_mm.is_finite() {
        return Err(Error::Domain(format!(
            "viewing distance must be positive, got {distance_mm}"
        )));
    }
    Ok(2.0 * distance_mm * (angle.radians() / 2.0).tan())
}

/// A threshold expressed in every common acuity notation at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcuityResult {
    pub logmar: f64,
    pub mar_arcmin: f64,
    pub decimal: f64,
    pub snellen_numerator: u32,
    pub snellen_denominator: f64,
}

impl AcuityResult {
    /// Builds the result from a logMAR value (the acuity staircase's level unit).
    pub fn from_logmar(logmar: f64) -> Result<Self> {
        if !logmar.is_finite() {
            return Err(Error::Domain(format!("logMAR must be finite, got {logmar}")));
        }
        Ok(Self::from_mar(10f64.powf(logmar), Some(logmar)))
    }

    fn from_mar(mar_arcmin: f64, logmar: Option<f64>) -> Self {
        let decimal = 1.0 / mar_arcmin;
        Self {
            logmar: logmar.unwrap_or_else(|| mar_arcmin.log10()),
            mar_arcmin,
            decimal,
            snellen_numerator: SNELLEN_NUMERATOR,
            snellen_denominator: SNELLEN_NUMERATOR as f64 / decimal,
        }
    }

    /// Imperial Snellen fraction, denominator rounded for display (`20/40`).
    pub fn snellen(&self) -> String {
        format!(
            "{}/{}",
            self.snellen_numerator,
            self.snellen_denominator.round() as i64
        )
    }

    /// Metric rendering of the same fraction (`6/12`).
    pub fn snellen_metric(&self) -> String {
        format!("6/{}", (6.0 / self.decimal).round() as i64)
    }
}

/// Acuity from the angle subtended by the optotype gap (MAR = gap in arcmin).
pub fn acuity_from_gap_angle(gap: VisualAngle) -> Result<AcuityResult> {
    if !(gap.arcmin() > 0.0) {
        return Err(Error::Domain(format!(
            "gap angle must be positive, got {} arcmin",
            gap.arcmin()
        )));
    }
    Ok(AcuityResult::from_mar(gap.arcmin(), None))
}

/// Signed Weber contrast `(L_target − L_background) / L_background`.
///
/// Dark letters on a light background give negative values.
pub fn weber_contrast(l_target: f64, l_background: f64) -> Result<f64> {
    if !(l_background > 0.0) || !l_background.is_finite() {
        return Err(Error::Domain(format!(
            "background luminance must be positive, got {l_background}"
        )));
    }
    if !(l_target >= 0.0) || !l_target.is_finite() {
        return Err(Error::Domain(format!(
            "target luminance must be non-negative, got {l_target}"
        )));
    }
    Ok((l_target - l_background) / l_background)
}

/// Michelson contrast `(L_max − L_min) / (L_max + L_min)`.
pub fn michelson_contrast(l_max: f64, l_min: f64) -> Result<f64> {
    if !(l_min >= 0.0) || !(l_max >= l_min) || !l_max.is_finite() {
        return Err(Error::Domain(format!(
            "need l_max >= l_min >= 0, got l_max={l_max}, l_min={l_min}"
        )));
    }
    let sum = l_max + l_min;
    if sum == 0.0 {
        return Err(Error::Domain("both luminances are zero".into()));
    }
    Ok((l_max - l_min) / sum)
}

/// RMS contrast: population standard deviation of the intensities.
pub fn rms_contrast(pixel_intensities: &[f64]) -> Result<f64> {
    if pixel_intensities.is_empty() {
        return Err(Error::Domain("rms contrast of an empty image".into()));
    }
    let n = pixel_intensities.len() as f64;
    let mean = pixel_intensities.iter().sum::<f64>() / n;
    let var = pixel_intensities
        .iter()
        .map(|v| (v - mean).powi(2))
        .sum::<f64>()
        / n;
    Ok(var.sqrt())
}

/// A contrast threshold with its sensitivity forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastResult {
    pub weber_threshold_magnitude: f64,
    pub log_cs: f64,
    pub percent_threshold: f64,
}

/// Contrast sensitivity from a (signed) Weber threshold. Only the magnitude
/// matters: logCS = log10(1/|CT|), percent = |CT|·100.
pub fn contrast_result_from_threshold(weber_threshold: f64) -> Result<ContrastResult> {
    let magnitude = weber_threshold.abs();
    if !(magnitude > 0.0 && magnitude <= 1.0) {
        return Err(Error::Domain(format!(
            "contrast threshold magnitude must lie in (0, 1], got {weber_threshold}"
        )));
    }
    Ok(ContrastResult {
        weber_threshold_magnitude: magnitude,
        log_cs: (1.0 / magnitude).log10(),
        percent_threshold: magnitude * 100.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PerceptionBand {
    AcuityNormal,
    AcuityBelowNormal,
    CsNormal,
    CsImpairment,
    CsDisability,
    TesSuperior,
    TesAverage,
    TesLow,
}

impl PerceptionBand {
    pub fn label(&self) -> &'static str {
        match self {
            PerceptionBand::AcuityNormal => "normal",
            PerceptionBand::AcuityBelowNormal => "below normal",
            PerceptionBand::CsNormal => "normal",
            PerceptionBand::CsImpairment => "impairment",
            PerceptionBand::CsDisability => "disability",
            PerceptionBand::TesSuperior => "superior",
            PerceptionBand::TesAverage => "average",
            PerceptionBand::TesLow => "low",
        }
    }
}

fn finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain(format!("{what} must be finite, got {value}")))
    }
}

/// `logMAR <= 0` is normal, anything above is below normal.
pub fn classify_acuity(logmar: f64) -> Result<PerceptionBand> {
    let logmar = finite(logmar, "logMAR")?;
    Ok(if logmar <= 0.0 {
        PerceptionBand::AcuityNormal
    } else {
        PerceptionBand::AcuityBelowNormal
    })
}

/// `logCS >= 1.5` normal, `[1.0, 1.5)` impairment, `< 1.0` disability.
pub fn classify_cs(log_cs: f64) -> Result<PerceptionBand> {
    let log_cs = finite(log_cs, "logCS")?;
    Ok(if log_cs >= 1.5 {
        PerceptionBand::CsNormal
    } else if log_cs >= 1.0 {
        PerceptionBand::CsImpairment
    } else {
        PerceptionBand::CsDisability
    })
}

/// Total Error Score bands.
///
/// `[0, 16]` superior, `(16, 100]` average, `> 100` low. Both shared
/// endpoints go to the better band: 16 is superior and 100 is average.
/// Scoring never yields negative values; if one is passed it lands in the
/// superior band so the classification stays total.
pub fn classify_tes(tes: f64) -> Result<PerceptionBand> {
    let tes = finite(tes, "TES")?;
    Ok(if tes <= 16.0 {
        PerceptionBand::TesSuperior
    } else if tes <= 100.0 {
        PerceptionBand::TesAverage
    } else {
        PerceptionBand::TesLow
    })
}
