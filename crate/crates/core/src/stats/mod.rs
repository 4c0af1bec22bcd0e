//! Nonparametric analysis: Friedman with Kendall's W, Wilcoxon signed-rank
//! with Bonferroni adjustment, Mann-Whitney U, Theil–Sen regression and
//! covariance ellipses, plus the benchmark-wide driver in [`analysis`].
//!
//! Every rank test has an exact path that enumerates the full permutation
//! distribution for small samples and a normal/χ² approximation beyond
//! that. [`TestReport::method`] records which one produced the p-value.

pub mod analysis;
mod ellipse;
mod friedman;
mod mann_whitney;
mod rank;
mod regression;
mod wilcoxon;

use serde::{Deserialize, Serialize};

pub use analysis::{analyze_benchmark, AnalysisConfig, BenchmarkReport, PlotSeries, ResultRow};
pub use ellipse::{covariance_ellipse, EllipseGeometry};
pub use friedman::{friedman, RepeatedMeasures, FRIEDMAN_EXACT_MAX_CONDITIONS, FRIEDMAN_EXACT_MAX_SUBJECTS};
pub use mann_whitney::{mann_whitney_u, MWU_EXACT_MAX_TOTAL};
pub use rank::average_ranks;
pub use regression::{robust_regression, LineFit};
pub use wilcoxon::{wilcoxon_signed_rank, WILCOXON_EXACT_MAX_PAIRS};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PMethod {
    Exact,
    Approximate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    /// χ² for Friedman, min(W+, W−) for Wilcoxon, min(U_a, U_b) for Mann-Whitney.
    pub statistic: f64,
    /// W+ for Wilcoxon, U_a for Mann-Whitney.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_statistic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
    /// Two-sided.
    pub p_value: f64,
    /// χ² tail probability when the exact Friedman p is the primary one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_asymptotic: Option<f64>,
    /// Normal-approximation z (with tie and continuity correction).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// Kendall's W for Friedman, rank-biserial correlation otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect_size: Option<f64>,
    pub method: PMethod,
    /// Observations that entered the test (subjects, non-zero pairs, pooled size).
    pub n: usize,
}

/// Multiplies each p-value by `family_size`, clamping at 1.
pub fn bonferroni(p_values: &[f64], family_size: usize) -> Result<Vec<f64>> {
    if family_size < p_values.len() || family_size == 0 {
        return Err(Error::Config(format!(
            "family size {family_size} is smaller than the {} p-values",
            p_values.len()
        )));
    }
    Ok(p_values
        .iter()
        .map(|p| (p * family_size as f64).min(1.0))
        .collect())
}

/// Stars for the conventional .05/.01/.001 levels.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

pub(crate) fn normal_two_sided(z: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * n.sf(z.abs())).min(1.0)
}

pub(crate) fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}
