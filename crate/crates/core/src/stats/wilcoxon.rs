use super::rank::{doubled_ranks, tie_term};
use super::{normal_two_sided, PMethod, TestReport};
use crate::{Error, Result};

/// Largest number of non-zero differences handled by exact enumeration.
pub const WILCOXON_EXACT_MAX_PAIRS: usize = 20;

/// Wilcoxon signed-rank test on paired observations `(a, b)`, using `a − b`.
///
/// Zero differences are dropped and tied magnitudes share average ranks.
/// The statistic is `min(W+, W−)`. The p-value is two-sided: the share of
/// the `2^m` sign assignments whose `W+` lies at least as far from its mean
/// as the observed one. Beyond `m = 20` the normal approximation with tie
/// and continuity correction is used.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<TestReport> {
    if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::Domain("non-finite value in pairs".into()));
    }
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let m = diffs.len();
    if m == 0 {
        return Err(Error::Degenerate(
            "all paired differences are zero; the test carries no information".into(),
        ));
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = doubled_ranks(&magnitudes);
    let total: i64 = ranks.iter().sum();
    let w_plus: i64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let w_minus = total - w_plus;

    let mf = m as f64;
    let mean = mf * (mf + 1.0) / 4.0;
    let var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_term(&ties) / 48.0;
    let w_plus_f = w_plus as f64 / 2.0;
    let z = continuity_z(w_plus_f - mean, var);

    let (p_value, method) = if m <= WILCOXON_EXACT_MAX_PAIRS {
        (exact_p(&ranks, w_plus), PMethod::Exact)
    } else {
        (normal_two_sided(z), PMethod::Approximate)
    };
    Ok(TestReport {
        statistic: w_plus.min(w_minus) as f64 / 2.0,
        secondary_statistic: Some(w_plus_f),
        df: None,
        p_value,
        p_asymptotic: None,
        z: Some(z),
        effect_size: Some((w_plus - w_minus) as f64 / total as f64),
        method,
        n: m,
    })
}

pub(crate) fn continuity_z(deviation: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return 0.0;
    }
    deviation.signum() * (deviation.abs() - 0.5).max(0.0) / var.sqrt()
}

/// Counts sign assignments by doubled `W+` with a subset-sum table.
fn exact_p(doubled_ranks: &[i64], observed: i64) -> f64 {
    let total: i64 = doubled_ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let far = (2 * observed - total).abs();
    let hits: u64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| (2 * *s as i64 - total).abs() >= far)
        .map(|(_, c)| c)
        .sum();
    hits as f64 / (1u64 << doubled_ranks.len()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sided_dominance_gives_zero() {
        let pairs: Vec<(f64, f64)> = (1..=12).map(|i| (i as f64 + 0.5, i as f64 * 0.1)).collect();
        let r = wilcoxon_signed_rank(&pairs).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.method, PMethod::Exact);
        // Only the all-plus and all-minus assignments are as extreme.
        assert_eq!(r.p_value, 2.0 / 4096.0);
        assert_eq!(r.effect_size, Some(1.0));
    }

    #[test]
    fn mirrored_differences_give_p_one() {
        let pairs = [(1.0, 0.0), (0.0, 1.0), (3.0, 1.0), (1.0, 3.0), (7.0, 2.0), (2.0, 7.0)];
        let r = wilcoxon_signed_rank(&pairs).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.z, Some(0.0));
    }

    #[test]
    fn zeros_dropped_and_all_zero_rejected() {
        let r = wilcoxon_signed_rank(&[(1.0, 1.0), (2.0, 1.0), (5.0, 3.0)]).unwrap();
        assert_eq!(r.n, 2);
        assert!(matches!(
            wilcoxon_signed_rank(&[(1.0, 1.0), (2.0, 2.0)]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn large_sample_uses_normal() {
        let pairs: Vec<(f64, f64)> = (0..30).map(|i| (i as f64 + if i % 4 == 0 { -1.0 } else { 2.0 }, i as f64)).collect();
        let r = wilcoxon_signed_rank(&pairs).unwrap();
        assert_eq!(r.method, PMethod::Approximate);
        assert!(r.p_value < 0.05 && r.p_value > 0.0);
        assert!(r.z.unwrap() > 0.0);
    }

    #[test]
    fn affine_scaling_of_differences_invariant() {
        let pairs = [(1.3, 0.2), (0.4, 1.9), (2.2, 0.1), (5.0, 4.7), (0.3, 2.8), (3.3, 0.9)];
        let base = wilcoxon_signed_rank(&pairs).unwrap();
        let scaled: Vec<(f64, f64)> = pairs.iter().map(|(a, b)| (a * 7.0 + 3.0, b * 7.0 + 3.0)).collect();
        let r = wilcoxon_signed_rank(&scaled).unwrap();
        assert_eq!(r.statistic, base.statistic);
        assert_eq!(r.p_value, base.p_value);
    }
}
