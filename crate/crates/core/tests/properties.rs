use edbench::eval::{auroc, bootstrap_auroc};
use edbench::features::{aggregate_trends, convert};
use edbench::labels::deterioration::window_label;
use edbench::labels::{truncate_and_propagate, Ternary};
use edbench::models::preprocess::decimate;
use ndarray::Array2;
use proptest::prelude::*;

fn ternary() -> impl Strategy<Value = Ternary> {
    prop_oneof![Just(Ternary::Positive), Just(Ternary::Negative), Just(Ternary::Masked)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn auroc_is_a_probability(rows in prop::collection::vec((-5i32..5, ternary()), 2..80)) {
        let scores: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
        let labels: Vec<Ternary> = rows.iter().map(|r| r.1).collect();
        if let Ok(a) = auroc(&scores, &labels) {
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn masked_rows_do_not_change_auroc(
        rows in prop::collection::vec((-5i32..5, any::<bool>()), 2..60),
        extra in prop::collection::vec(-5i32..5, 0..20),
    ) {
        let mut scores: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
        let mut labels: Vec<Ternary> = rows.iter().map(|r| Ternary::from_bool(r.1)).collect();
        let before = auroc(&scores, &labels).ok();
        scores.extend(extra.iter().map(|&s| s as f64));
        labels.extend(extra.iter().map(|_| Ternary::Masked));
        prop_assert_eq!(before, auroc(&scores, &labels).ok());
    }

    #[test]
    fn bootstrap_interval_is_ordered(
        rows in prop::collection::vec((-3.0f64..3.0, any::<bool>()), 4..60),
        seed in any::<u64>(),
    ) {
        prop_assume!(rows.iter().any(|r| r.1) && rows.iter().any(|r| !r.1));
        let scores = vec![rows.iter().map(|r| r.0).collect::<Vec<_>>()];
        let labels = vec![rows.iter().map(|r| Ternary::from_bool(r.1)).collect::<Vec<_>>()];
        let res = bootstrap_auroc(&["x".to_string()], &scores, &labels, 50, 0.9, seed).unwrap();
        let m = res.macro_auroc;
        prop_assert!(m.lo <= m.point && m.point <= m.hi);
    }

    #[test]
    fn trend_mean_lies_within_range(values in prop::collection::vec((0u8..=90, -50.0f64..250.0), 1..30)) {
        let series: Vec<(f64, f64)> = values.iter().map(|&(t, v)| (t as f64, v)).collect();
        let agg = aggregate_trends(&series);
        let (lo, hi, mean) = (agg.min.unwrap(), agg.max.unwrap(), agg.mean.unwrap());
        prop_assert!(lo - 1e-9 <= mean && mean <= hi + 1e-9);
        prop_assert!(agg.std.unwrap() >= 0.0);
    }

    #[test]
    fn propagation_yields_every_prefix(code in "[A-Z][0-9]{2,6}") {
        let set = truncate_and_propagate(&code).unwrap();
        let top = code.len().min(5);
        prop_assert_eq!(set.len(), top - 2);
        for c in &set {
            prop_assert!(code.starts_with(c.as_str()));
        }
    }

    #[test]
    fn window_rule_ignores_events_before_arrival(
        before in prop::collection::vec(1i64..100_000, 0..5),
        after in prop::option::of(0i64..200_000),
    ) {
        let arrival = 1_000_000;
        let with: Vec<i64> = before.iter().map(|b| arrival - b).chain(after.map(|a| arrival + a)).collect();
        let without: Vec<i64> = after.map(|a| arrival + a).into_iter().collect();
        prop_assert_eq!(
            window_label(with, arrival, arrival + 5400, arrival + 86_400),
            window_label(without, arrival, arrival + 5400, arrival + 86_400)
        );
    }

    #[test]
    fn temperature_round_trips(c in -50.0f64..150.0) {
        let f = convert(c, "C", "F").unwrap();
        prop_assert!((convert(f, "F", "C").unwrap() - c).abs() < 1e-9);
    }

    #[test]
    fn decimated_length_is_ceiling(len in 1usize..400, q in prop::sample::select(vec![1usize, 2, 4, 5])) {
        let x = Array2::from_shape_fn((2, len), |(l, t)| (t as f64 * 0.1 + l as f64).sin());
        let y = decimate(x.view(), 100.0, 100.0 / q as f64).unwrap();
        prop_assert_eq!(y.dim(), (2, len.div_ceil(q)));
    }
}
