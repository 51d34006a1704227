use diffsum::audit::{
    choose_c, decimal_digits, diffsum_stop_condition, evaluate, reduce_to_pair, AuditParams, Decision,
    DiffSumStatistic, FullCountResult, TallySnapshot,
};
use proptest::prelude::*;

fn ab() -> Vec<String> {
    vec!["A".into(), "B".into()]
}

proptest! {
    #[test]
    fn stopping_is_monotone_in_c(a in 0u64..5_000, b in 0u64..5_000, c1 in 1u64..40, extra in 0u64..40) {
        let c2 = c1 + extra;
        if diffsum_stop_condition(a, b, c2) {
            prop_assert!(diffsum_stop_condition(a, b, c1));
        }
    }

    #[test]
    fn stopping_survives_scaling(a in 0u64..5_000, b in 0u64..5_000, c in 1u64..40, k in 1u64..50) {
        if diffsum_stop_condition(a, b, c) {
            prop_assert!(diffsum_stop_condition(k * a, k * b, c));
        }
    }

    #[test]
    fn acceptance_needs_a_lead(a in 0u64..u64::MAX / 4, b in 0u64..u64::MAX / 4, c in 1u64..1_000) {
        if diffsum_stop_condition(a, b, c) {
            prop_assert!(a > b);
        }
        let s = DiffSumStatistic::new(a, b, c);
        let diff = a.abs_diff(b) as u128;
        prop_assert_eq!(s.statistic, diff * diff);
        prop_assert_eq!(s.threshold, c as u128 * (a as u128 + b as u128));
    }

    #[test]
    fn c_is_digits_plus_delta(n in 1u64..u64::MAX, delta in 0u32..5) {
        let d = decimal_digits(n).unwrap();
        prop_assert_eq!(d as usize, n.to_string().len());
        prop_assert_eq!(choose_c(n, delta).unwrap(), d as u64 + delta as u64);
    }

    #[test]
    fn pair_is_top_two(counts in prop::collection::vec(0u64..100, 2..6)) {
        let names: Vec<String> = (0..counts.len()).map(|i| format!("c{i}")).collect();
        let tally = TallySnapshot::from_counts(names.iter().cloned().zip(counts.iter().copied()), 0);
        let pair = reduce_to_pair(&tally).unwrap();
        let mut sorted = counts.clone();
        sorted.sort_unstable_by(|x, y| y.cmp(x));
        prop_assert_eq!(pair.a, sorted[0]);
        prop_assert_eq!(pair.b, sorted[1]);
        prop_assert_eq!(tally.count(&pair.winner), pair.a);
    }

    #[test]
    fn evaluate_orders_full_count_first(a in 0u64..60, b in 0u64..60, invalid in 0u64..10, c in 1u64..10) {
        let n = a + b + invalid;
        prop_assume!(n >= 2);
        let params = AuditParams::new(n, ab(), 0).unwrap().with_c(c).unwrap();
        let tally = TallySnapshot::from_counts([("A", a), ("B", b)], invalid);
        let decision = evaluate(&tally, &params).unwrap();
        let expected = if a > b {
            FullCountResult::Winner { winner: "A".into() }
        } else if b > a {
            FullCountResult::Winner { winner: "B".into() }
        } else {
            FullCountResult::Tie
        };
        prop_assert_eq!(decision, Decision::FullCountComplete { result: expected });
    }

    #[test]
    fn accept_precedes_cutover(a in 0u64..200, b in 0u64..200, c in 1u64..10) {
        let n = 100_000;
        // Cutover at one ballot: any non-accepting tally recommends it.
        let params = AuditParams::new(n, ab(), 0).unwrap().with_c(c).unwrap().with_cutover_fraction(1e-5).unwrap();
        prop_assume!(a + b >= 1);
        let tally = TallySnapshot::from_counts([("A", a), ("B", b)], 0);
        let decision = evaluate(&tally, &params).unwrap();
        if diffsum_stop_condition(a.max(b), a.min(b), c) {
            prop_assert!(matches!(decision, Decision::AcceptOutcome { .. }), "{:?}", decision);
        } else {
            prop_assert!(matches!(decision, Decision::RecommendCutover { .. }), "{:?}", decision);
        }
    }
}

#[test]
fn no_overflow_at_extremes() {
    let big = u64::MAX;
    assert!(diffsum_stop_condition(big, 0, 1));
    assert!(!diffsum_stop_condition(big, big, 1));
    let s = DiffSumStatistic::new(big, 0, u64::MAX);
    assert_eq!(s.statistic, (big as u128) * (big as u128));
    assert_eq!(s.threshold, (big as u128) * (big as u128));
    assert!(!diffsum_stop_condition(big, 0, u64::MAX));
}
