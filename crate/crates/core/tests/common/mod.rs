//! Brute-force reference implementations shared by the integration tests
//! and the acceptance suite. They favour obviousness over speed and share
//! no code with the library.

#![allow(dead_code)]

/// Slack for "at least as extreme" comparisons between recomputed statistics.
pub const EXTREME_SLACK: f64 = 1e-9;

/// Mid-ranks, 1-based, by counting smaller and equal values.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let below = values.iter().filter(|w| *w < v).count() as f64;
            let equal = values.iter().filter(|w| *w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn permutations(items: &[f64]) -> Vec<Vec<f64>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for tail in permutations(&rest) {
            let mut row = vec![head];
            row.extend(tail);
            out.push(row);
        }
    }
    out
}

fn tie_sum(values: &[f64]) -> f64 {
    let mut seen: Vec<f64> = Vec::new();
    let mut total = 0.0;
    for v in values {
        if seen.contains(v) {
            continue;
        }
        seen.push(*v);
        let t = values.iter().filter(|w| *w == v).count() as f64;
        total += t * t * t - t;
    }
    total
}

fn friedman_chi2_from_ranks(rank_rows: &[Vec<f64>], tie_total: f64) -> f64 {
    let n = rank_rows.len() as f64;
    let k = rank_rows[0].len() as f64;
    let sums: Vec<f64> = (0..rank_rows[0].len())
        .map(|j| rank_rows.iter().map(|r| r[j]).sum())
        .collect();
    let raw = 12.0 / (n * k * (k + 1.0)) * sums.iter().map(|s| s * s).sum::<f64>() - 3.0 * n * (k + 1.0);
    raw / (1.0 - tie_total / (n * (k * k * k - k)))
}

/// Friedman χ² and the exact p-value over every within-row permutation.
pub fn friedman_oracle(rows: &[Vec<f64>]) -> (f64, f64) {
    let ranks: Vec<Vec<f64>> = rows.iter().map(|r| mid_ranks(r)).collect();
    let ties: f64 = rows.iter().map(|r| tie_sum(r)).sum();
    let observed = friedman_chi2_from_ranks(&ranks, ties);
    let options: Vec<Vec<Vec<f64>>> = ranks.iter().map(|r| permutations(r)).collect();
    let mut index = vec![0usize; rows.len()];
    let (mut hits, mut total) = (0u64, 0u64);
    loop {
        let pick: Vec<Vec<f64>> = index.iter().zip(&options).map(|(i, o)| o[*i].clone()).collect();
        total += 1;
        if friedman_chi2_from_ranks(&pick, ties) >= observed - EXTREME_SLACK {
            hits += 1;
        }
        let mut d = 0;
        loop {
            if d == index.len() {
                return (observed, hits as f64 / total as f64);
            }
            index[d] += 1;
            if index[d] < options[d].len() {
                break;
            }
            index[d] = 0;
            d += 1;
        }
    }
}

/// W+ and the exact two-sided p-value over all sign flips.
pub fn wilcoxon_oracle(pairs: &[(f64, f64)]) -> (f64, f64) {
    let d: Vec<f64> = pairs.iter().map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let ranks = mid_ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let m = d.len();
    let mean = ranks.iter().sum::<f64>() / 2.0;
    let observed: f64 = ranks.iter().zip(&d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();
    let mut hits = 0u64;
    for mask in 0u64..(1 << m) {
        let w: f64 = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if (w - mean).abs() >= (observed - mean).abs() - EXTREME_SLACK {
            hits += 1;
        }
    }
    (observed, hits as f64 / (1u64 << m) as f64)
}

/// U for the first group and the exact two-sided p-value over all splits.
pub fn mann_whitney_oracle(a: &[f64], b: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = mid_ranks(&pooled);
    let (na, n) = (a.len(), pooled.len());
    let u_of = |members: &[usize]| members.iter().map(|i| ranks[*i]).sum::<f64>() - (na * (na + 1)) as f64 / 2.0;
    let observed = u_of(&(0..na).collect::<Vec<_>>());
    let mean = (na * b.len()) as f64 / 2.0;
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        total += 1;
        if (u_of(&members) - mean).abs() >= (observed - mean).abs() - EXTREME_SLACK {
            hits += 1;
        }
    }
    (observed, hits as f64 / total as f64)
}

fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Median pairwise slope.
pub fn theil_sen_slope_oracle(x: &[f64], y: &[f64]) -> f64 {
    let mut slopes = Vec::new();
    for i in 0..x.len() {
        for j in 0..x.len() {
            if i < j && x[i] != x[j] {
                slopes.push((y[j] - y[i]) / (x[j] - x[i]));
            }
        }
    }
    median_of(slopes)
}

/// Total error of one pinned group, looking every cap's neighbours up by position.
pub fn tes_oracle(order: &[u16]) -> u32 {
    let position = |cap: u16| order.iter().position(|c| *c == cap).unwrap();
    order[1..order.len() - 1]
        .iter()
        .map(|&cap| {
            let p = position(cap);
            let before = order[p - 1] as i32;
            let after = order[p + 1] as i32;
            ((before - cap as i32).abs() + (after - cap as i32).abs() - 2) as u32
        })
        .sum()
}
