mod common;

use proptest::prelude::*;
use visbench::stats::{
    bonferroni, friedman, mann_whitney_u, robust_regression, wilcoxon_signed_rank, PMethod, RepeatedMeasures,
};

const TOL: f64 = 1e-12;

// Small integer grids produce plenty of ties.
fn cell() -> impl Strategy<Value = f64> {
    (0i32..6).prop_map(f64::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn friedman_matches_enumeration(rows in prop::collection::vec(prop::collection::vec(cell(), 3), 2..=4)) {
        prop_assume!(rows.iter().any(|r| r.iter().any(|v| *v != r[0])));
        let report = friedman(&RepeatedMeasures::from_rows(rows.clone()).unwrap()).unwrap();
        let (chi2, p) = common::friedman_oracle(&rows);
        prop_assert_eq!(report.method, PMethod::Exact);
        prop_assert!((report.statistic - chi2).abs() < 1e-9, "{} vs {}", report.statistic, chi2);
        prop_assert!((report.p_value - p).abs() < TOL, "{} vs {}", report.p_value, p);
    }

    #[test]
    fn wilcoxon_matches_enumeration(pairs in prop::collection::vec((cell(), cell()), 1..=10)) {
        prop_assume!(pairs.iter().any(|(a, b)| a != b));
        let report = wilcoxon_signed_rank(&pairs).unwrap();
        let (w_plus, p) = common::wilcoxon_oracle(&pairs);
        prop_assert_eq!(report.secondary_statistic, Some(w_plus));
        prop_assert!((report.p_value - p).abs() < TOL, "{} vs {}", report.p_value, p);
    }

    #[test]
    fn mann_whitney_matches_enumeration(
        a in prop::collection::vec(cell(), 1..=6),
        b in prop::collection::vec(cell(), 1..=6),
    ) {
        let report = mann_whitney_u(&a, &b).unwrap();
        let (u, p) = common::mann_whitney_oracle(&a, &b);
        prop_assert_eq!(report.secondary_statistic, Some(u));
        prop_assert!((report.p_value - p).abs() < TOL, "{} vs {}", report.p_value, p);
    }

    #[test]
    fn theil_sen_matches_pairwise_median(points in prop::collection::vec((-20i32..20, -50i32..50), 3..30)) {
        let x: Vec<f64> = points.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = points.iter().map(|p| f64::from(p.1)).collect();
        prop_assume!(x.iter().any(|v| *v != x[0]));
        let fit = robust_regression(&x, &y).unwrap();
        prop_assert!((fit.slope - common::theil_sen_slope_oracle(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn bonferroni_is_capped_scaling(p in prop::collection::vec(0.0f64..=1.0, 1..10), extra in 0usize..5) {
        let family = p.len() + extra;
        let adjusted = bonferroni(&p, family).unwrap();
        for (raw, adj) in p.iter().zip(&adjusted) {
            prop_assert_eq!(*adj, (raw * family as f64).min(1.0));
        }
    }
}

#[test]
fn exact_p_values_are_valid_probabilities_in_small_cases() {
    let rows = vec![vec![1.0, 2.0, 3.0]; 4];
    let report = friedman(&RepeatedMeasures::from_rows(rows.clone()).unwrap()).unwrap();
    let (_, p) = common::friedman_oracle(&rows);
    // Perfect agreement across four subjects: 6 of 1296 orderings are as extreme.
    assert!((p - 6.0 / 1296.0).abs() < TOL);
    assert!((report.p_value - p).abs() < TOL);
}
