/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    doubled_ranks(values).0.into_iter().map(|r| r as f64 / 2.0).collect()
}

/// Twice the average ranks, which are always integers, plus the size of
/// every tie group (including singletons).
pub(crate) fn doubled_ranks(values: &[f64]) -> (Vec<i64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0i64; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1; doubled mean = (i+1)+(j+1)
        let doubled = (i + 1 + j + 1) as i64;
        for &idx in &order[i..=j] {
            ranks[idx] = doubled;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Σ (t³ − t) over tie groups.
pub(crate) fn tie_term(ties: &[usize]) -> f64 {
    ties.iter().map(|&t| (t * t * t - t) as f64).sum()
}
