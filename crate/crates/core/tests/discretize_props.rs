//! Property tests for quantile discretization and the train/validation split.

use std::collections::BTreeSet;

use proptest::prelude::*;

use sembn::dataset::{split, train_size, ObservedDataset, VariableSchema};
use sembn::discretize::{fit_thresholds, quantile_thresholds};

fn distinct_scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(-1_000_000i64..1_000_000, 10..300)
        .prop_map(|s| s.into_iter().map(|v| v as f64 / 1000.0).collect::<Vec<_>>())
        .prop_shuffle()
}

proptest! {
    #[test]
    fn thresholds_are_sorted_and_within_range(scores in distinct_scores(), k in 2usize..8) {
        prop_assume!(scores.len() >= k);
        let t = fit_thresholds(&scores, k).unwrap();
        let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(t.thresholds.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(t.thresholds.iter().all(|&x| x >= lo && x <= hi));
        prop_assert_eq!(t.levels(), t.thresholds.len() + 1);
    }

    #[test]
    fn bins_are_roughly_equal_for_distinct_scores(scores in distinct_scores(), k in 2usize..6) {
        prop_assume!(scores.len() >= 5 * k);
        let t = fit_thresholds(&scores, k).unwrap();
        prop_assert!(!t.collapsed);
        let mut counts = vec![0usize; k];
        for &s in &scores {
            counts[t.level_of(s) - 1] += 1;
        }
        let n = scores.len() as f64;
        for c in counts {
            prop_assert!((c as f64 - n / k as f64).abs() <= 1.0 + 1e-9, "count {} of {}", c, n);
        }
    }

    #[test]
    fn levels_invariant_under_increasing_transform(scores in distinct_scores(), k in 2usize..6) {
        prop_assume!(scores.len() >= k);
        let t = fit_thresholds(&scores, k).unwrap();
        let shifted: Vec<f64> = scores.iter().map(|s| 3.0 * s + 7.0).collect();
        let u = fit_thresholds(&shifted, k).unwrap();
        for (a, b) in scores.iter().zip(&shifted) {
            prop_assert_eq!(t.level_of(*a), u.level_of(*b));
        }
    }

    #[test]
    fn levels_are_monotone(scores in distinct_scores(), k in 2usize..8) {
        prop_assume!(scores.len() >= k);
        let t = fit_thresholds(&scores, k).unwrap();
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        let levels: Vec<usize> = sorted.iter().map(|&s| t.level_of(s)).collect();
        prop_assert!(levels.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(levels.iter().all(|&l| (1..=k).contains(&l)));
    }

    #[test]
    fn raw_quantiles_independent_of_order(scores in distinct_scores(), k in 2usize..8) {
        prop_assume!(scores.len() >= k);
        let mut rev = scores.clone();
        rev.reverse();
        prop_assert_eq!(quantile_thresholds(&scores, k).unwrap(), quantile_thresholds(&rev, k).unwrap());
    }

    #[test]
    fn split_partitions_ids(n in 2usize..400, seed in any::<u64>(), pct in 10u32..90) {
        let fraction = f64::from(pct) / 100.0;
        prop_assume!(train_size(n, fraction) > 0 && train_size(n, fraction) < n);
        let schema = vec![VariableSchema::continuous("x")];
        let ids: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        let rows = (0..n).map(|i| vec![Some(i as f64)]).collect();
        let data = ObservedDataset::new(schema, ids.clone(), rows).unwrap();
        let a = split(&data, fraction, seed).unwrap();
        let b = split(&data, fraction, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.train_ids.is_disjoint(&a.validation_ids));
        let union: BTreeSet<String> = a.train_ids.union(&a.validation_ids).cloned().collect();
        prop_assert_eq!(union, ids.into_iter().collect::<BTreeSet<_>>());
        prop_assert_eq!(a.train_ids.len(), train_size(n, fraction));
    }
}

#[test]
fn tied_scores_collapse_bins() {
    let scores = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 3.0, 4.0];
    let t = fit_thresholds(&scores, 5).unwrap();
    assert!(t.collapsed);
    assert!(t.levels() < 5);
    assert_eq!(t.level_of(1.0), 1);
}
