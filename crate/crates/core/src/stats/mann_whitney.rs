use super::rank::{doubled_ranks, tie_term};
use super::wilcoxon::continuity_z;
use super::{normal_two_sided, PMethod, TestReport};
use crate::{Error, Result};

/// Largest pooled sample size handled by exact enumeration.
pub const MWU_EXACT_MAX_TOTAL: usize = 16;

/// Mann-Whitney U test for two independent groups.
///
/// `statistic` is `min(U_a, U_b)` and `secondary_statistic` is `U_a`. With
/// `n_a + n_b ≤ 16` the two-sided p-value is the exact share of the
/// `C(N, n_a)` assignments of pooled (average) ranks to group A whose rank
/// sum is at least as far from its mean as observed; otherwise the
/// tie-corrected normal approximation with continuity correction.
pub fn mann_whitney_u(group_a: &[f64], group_b: &[f64]) -> Result<TestReport> {
    let (na, nb) = (group_a.len(), group_b.len());
    if na == 0 || nb == 0 {
        return Err(Error::Domain("both groups must be non-empty".into()));
    }
    if group_a.iter().chain(group_b).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite observation".into()));
    }
    let pooled: Vec<f64> = group_a.iter().chain(group_b).copied().collect();
    let total = na + nb;
    let (ranks, ties) = doubled_ranks(&pooled);
    let doubled_sum_a: i64 = ranks[..na].iter().sum();
    let (naf, nbf, nf) = (na as f64, nb as f64, total as f64);
    let u_a = doubled_sum_a as f64 / 2.0 - naf * (naf + 1.0) / 2.0;
    let u_b = naf * nbf - u_a;

    let mean = naf * nbf / 2.0;
    let var = naf * nbf / 12.0 * ((nf + 1.0) - tie_term(&ties) / (nf * (nf - 1.0)).max(1.0));
    let z = continuity_z(u_a - mean, var);

    let (p_value, method) = if total <= MWU_EXACT_MAX_TOTAL {
        (exact_p(&ranks, na, doubled_sum_a), PMethod::Exact)
    } else {
        let p = if var > 0.0 { normal_two_sided(z) } else { 1.0 };
        (p, PMethod::Approximate)
    };
    Ok(TestReport {
        statistic: u_a.min(u_b),
        secondary_statistic: Some(u_a),
        df: None,
        p_value,
        p_asymptotic: None,
        z: Some(z),
        effect_size: Some((u_a - u_b) / (naf * nbf)),
        method,
        n: total,
    })
}

/// Table of (members chosen, doubled rank sum) → number of subsets.
fn exact_p(doubled_ranks: &[i64], na: usize, observed: i64) -> f64 {
    let max_sum: i64 = doubled_ranks.iter().sum();
    let width = max_sum as usize + 1;
    let mut table = vec![vec![0u64; width]; na + 1];
    table[0][0] = 1;
    for &r in doubled_ranks {
        let r = r as usize;
        for chosen in (0..na).rev() {
            for s in (0..width - r).rev() {
                let c = table[chosen][s];
                if c > 0 {
                    table[chosen + 1][s + r] += c;
                }
            }
        }
    }
    let n = doubled_ranks.len() as i64;
    let expected = na as i64 * (n + 1);
    let far = (observed - expected).abs();
    let row = &table[na];
    let all: u64 = row.iter().sum();
    let hits: u64 = row
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 - expected).abs() >= far)
        .map(|(_, c)| c)
        .sum();
    hits as f64 / all as f64
}
