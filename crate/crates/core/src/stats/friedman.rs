use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::rank::{doubled_ranks, tie_term};
use super::{PMethod, TestReport};
use crate::{Error, Result};

/// Exact Friedman p-values are enumerated up to this many subjects...
pub const FRIEDMAN_EXACT_MAX_SUBJECTS: usize = 5;
/// ...and this many conditions.
pub const FRIEDMAN_EXACT_MAX_CONDITIONS: usize = 4;

/// Subjects × conditions table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedMeasures {
    rows: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl RepeatedMeasures {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let k = labels.len();
        if k < 2 {
            return Err(Error::Domain("need at least two conditions".into()));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != k) {
            return Err(Error::Domain(format!("row {r} does not have {k} cells")));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("missing or non-finite cell".into()));
        }
        Ok(Self { rows, labels })
    }

    /// Unlabelled table with conditions named `c1..ck`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        Self::new(rows, (1..=k).map(|i| format!("c{i}")).collect())
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn subjects(&self) -> usize {
        self.rows.len()
    }

    pub fn conditions(&self) -> usize {
        self.labels.len()
    }
}

/// Friedman test with tie correction and Kendall's W.
///
/// For small designs (`n ≤ 5`, `k ≤ 4`) the reported p-value is exact: the
/// share of all `(k!)ⁿ` within-row rank permutations whose statistic is at
/// least the observed one. The χ² tail is kept in `p_asymptotic`.
pub fn friedman(data: &RepeatedMeasures) -> Result<TestReport> {
    let n = data.subjects();
    let k = data.conditions();
    if n < 2 {
        return Err(Error::Domain("need at least two subjects".into()));
    }
    let mut row_ranks = Vec::with_capacity(n);
    let mut ties = 0.0;
    for row in data.rows() {
        let (r, t) = doubled_ranks(row);
        ties += tie_term(&t);
        row_ranks.push(r);
    }
    let (nf, kf) = (n as f64, k as f64);
    let correction = 1.0 - ties / (nf * kf * (kf * kf - 1.0));
    if correction <= 0.0 {
        return Err(Error::Degenerate(
            "every subject has identical values across conditions".into(),
        ));
    }
    let doubled_sums = column_sums(&row_ranks, k);
    let chi2 = chi_square(&doubled_sums, n, k, correction);
    let df = kf - 1.0;
    let p_chi2 = ChiSquared::new(df).expect("df >= 1").sf(chi2).clamp(0.0, 1.0);
    let w = chi2 / (nf * df);

    let exact = n <= FRIEDMAN_EXACT_MAX_SUBJECTS && k <= FRIEDMAN_EXACT_MAX_CONDITIONS;
    let (p_value, method, p_asymptotic) = if exact {
        (exact_p(&row_ranks, &doubled_sums), PMethod::Exact, Some(p_chi2))
    } else {
        (p_chi2, PMethod::Approximate, None)
    };
    Ok(TestReport {
        statistic: chi2,
        secondary_statistic: None,
        df: Some(df),
        p_value,
        p_asymptotic,
        z: None,
        effect_size: Some(w),
        method,
        n,
    })
}

fn column_sums(row_ranks: &[Vec<i64>], k: usize) -> Vec<i64> {
    let mut sums = vec![0i64; k];
    for r in row_ranks {
        for (s, v) in sums.iter_mut().zip(r) {
            *s += v;
        }
    }
    sums
}

fn chi_square(doubled_sums: &[i64], n: usize, k: usize, correction: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = doubled_sums.iter().map(|&s| (s as f64 / 2.0).powi(2)).sum();
    let raw = 12.0 / (nf * kf * (kf + 1.0)) * sum_sq - 3.0 * nf * (kf + 1.0);
    (raw / correction).max(0.0)
}

/// Distribution of column rank sums, built one row at a time. The statistic
/// is increasing in Σ sums², so comparing that integer is exact.
fn exact_p(row_ranks: &[Vec<i64>], observed: &[i64]) -> f64 {
    let k = observed.len();
    let target: i64 = observed.iter().map(|s| s * s).sum();
    let mut dist: HashMap<Vec<i64>, u64> = HashMap::from([(vec![0; k], 1)]);
    for ranks in row_ranks {
        let perms = permutations(ranks);
        let mut next: HashMap<Vec<i64>, u64> = HashMap::with_capacity(dist.len() * perms.len());
        for (sums, count) in &dist {
            for p in &perms {
                let key: Vec<i64> = sums.iter().zip(p).map(|(a, b)| a + b).collect();
                *next.entry(key).or_insert(0) += count;
            }
        }
        dist = next;
    }
    let total: u64 = dist.values().sum();
    let hits: u64 = dist
        .iter()
        .filter(|(sums, _)| sums.iter().map(|s| s * s).sum::<i64>() >= target)
        .map(|(_, c)| c)
        .sum();
    hits as f64 / total as f64
}

/// All `len!` orderings, repeats included so that each carries equal weight.
fn permutations(items: &[i64]) -> Vec<Vec<i64>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}
