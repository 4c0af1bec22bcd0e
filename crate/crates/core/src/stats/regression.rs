use serde::{Deserialize, Serialize};

use super::median;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

impl LineFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Theil–Sen line: the median of all pairwise slopes (pairs with equal x
/// are skipped) and the median of `y − slope·x` as intercept.
pub fn robust_regression(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "x has {} values but y has {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite observation".into()));
    }
    let mut slopes = Vec::with_capacity(x.len() * x.len().saturating_sub(1) / 2);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if x[i] != x[j] {
                slopes.push((y[j] - y[i]) / (x[j] - x[i]));
            }
        }
    }
    if slopes.is_empty() {
        return Err(Error::Degenerate("need at least two distinct x values".into()));
    }
    slopes.sort_by(f64::total_cmp);
    let slope = median(&slopes);
    let mut offsets: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| yi - slope * xi).collect();
    offsets.sort_by(f64::total_cmp);
    Ok(LineFit {
        slope,
        intercept: median(&offsets),
    })
}
