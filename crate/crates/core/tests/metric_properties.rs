use feedrank_core::metrics::{hit_at_k, mean_average_precision, mean_reciprocal_rank, QueryOutcome};
use feedrank_core::{a12, mann_whitney_normal, mann_whitney_u};
use proptest::prelude::*;

/// Query outcomes over lists of `a0..a9`, each with a non-empty relevant set
/// that may include ids outside the list.
fn outcomes(single: bool) -> impl Strategy<Value = Vec<QueryOutcome>> {
    let rel = if single { 1..2usize } else { 1..4usize };
    prop::collection::vec(prop::collection::btree_set(0usize..14, rel), 1..20).prop_map(|sets| {
        sets.into_iter()
            .enumerate()
            .map(|(i, s)| {
                let ranked = (0..10).map(|k| format!("a{k}")).collect();
                QueryOutcome::new(format!("q{i}"), ranked, s.into_iter().map(|k| format!("a{k}")))
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn metrics_are_bounded_and_ordered(o in outcomes(false)) {
        let mut prev = 0.0;
        for k in 1..=12 {
            let h = hit_at_k(&o, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&h));
            prop_assert!(h >= prev);
            prev = h;
        }
        let map = mean_average_precision(&o).unwrap();
        let mrr = mean_reciprocal_rank(&o).unwrap();
        prop_assert!((0.0..=1.0).contains(&map));
        prop_assert!(mrr <= prev + 1e-12);
    }

    #[test]
    fn single_relevant_map_equals_mrr(o in outcomes(true)) {
        let map = mean_average_precision(&o).unwrap();
        let mrr = mean_reciprocal_rank(&o).unwrap();
        prop_assert!((map - mrr).abs() < 1e-12);
    }

    #[test]
    fn a12_bounded_and_complementary(a in prop::collection::vec(0u32..1000, 1..12), b in prop::collection::vec(1000u32..2000, 1..12), mix in any::<bool>()) {
        // Shifting b into a's range when `mix` keeps the samples tie-free.
        let a: Vec<f64> = a.iter().enumerate().map(|(i, v)| *v as f64 * 2.0 + i as f64 * 1e-4).collect();
        let b: Vec<f64> = b.iter().enumerate().map(|(i, v)| {
            let base = if mix { (*v - 1000) as f64 * 2.0 + 1.0 } else { *v as f64 * 2.0 };
            base + i as f64 * 1e-4
        }).collect();
        let ab = a12(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab + a12(&b, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_and_normal_agree_at_eight(vals in prop::collection::btree_set(0u32..10_000, 16)) {
        let vals: Vec<f64> = vals.into_iter().map(f64::from).collect();
        // Interleave so both sides span the range.
        let a: Vec<f64> = vals.iter().step_by(2).copied().collect();
        let b: Vec<f64> = vals.iter().skip(1).step_by(2).copied().collect();
        let exact = mann_whitney_u(&a, &b).unwrap();
        let approx = mann_whitney_normal(&a, &b).unwrap();
        prop_assert!(exact.exact);
        prop_assert!((exact.p - approx.p).abs() < 0.02);
    }
}

#[test]
fn exact_and_normal_agree_on_separated_eights() {
    let a: Vec<f64> = (0..8).map(|i| i as f64).collect();
    for shift in [0.5, 2.5, 4.5, 8.5] {
        let b: Vec<f64> = a.iter().map(|v| v + shift).collect();
        let exact = mann_whitney_u(&a, &b).unwrap();
        let approx = mann_whitney_normal(&a, &b).unwrap();
        assert!((exact.p - approx.p).abs() < 0.02, "shift {shift}: {} vs {}", exact.p, approx.p);
    }
}
