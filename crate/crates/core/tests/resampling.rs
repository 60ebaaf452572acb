use lovasz_core::lll::format::{parse_instance, write_instance};
use lovasz_core::lll::{
    check_condition, event_probability, solve_moser_tardos, verify_assignment, Event, VarSpec,
    Verdict,
};
use lovasz_core::ratio::{self, Rational};
use proptest::prelude::*;

/// Events over `n` fair bits, each forbidding one pattern on a random support.
fn instance() -> impl Strategy<Value = (usize, Vec<(Vec<usize>, Vec<u32>)>)> {
    (3usize..=12).prop_flat_map(|n| {
        let event = proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 2..=4.min(n))
            .prop_flat_map(|vbl| {
                let k = vbl.len();
                (Just(vbl), proptest::collection::vec(0u32..2, k))
            });
        (Just(n), proptest::collection::vec(event, 1..=16))
    })
}

fn build(n: usize, raw: &[(Vec<usize>, Vec<u32>)]) -> (Vec<VarSpec>, Vec<Event>) {
    let vars = (0..n).map(VarSpec::fair_bit).collect();
    let events = raw
        .iter()
        .enumerate()
        .map(|(id, (vbl, row))| Event::new(id, vbl.clone(), vec![row.clone()]).unwrap())
        .collect();
    (vars, events)
}

fn avoidable(n: usize, raw: &[(Vec<usize>, Vec<u32>)]) -> bool {
    (0u32..1 << n).any(|a| {
        raw.iter()
            .all(|(vbl, row)| vbl.iter().zip(row).any(|(&v, &b)| (a >> v) & 1 != b))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resampling_agrees_with_exhaustive_search((n, raw) in instance(), seed in any::<u64>()) {
        let (vars, events) = build(n, &raw);
        let result = solve_moser_tardos(&events, &vars, seed, 200_000);
        if avoidable(n, &raw) {
            let assignment = result.expect("avoidable instance solved");
            prop_assert!(verify_assignment(&assignment, &events).unwrap().is_empty());
        } else {
            prop_assert!(result.is_err());
        }
    }

    #[test]
    fn same_seed_same_assignment((n, raw) in instance(), seed in any::<u64>()) {
        prop_assume!(avoidable(n, &raw));
        let (vars, events) = build(n, &raw);
        let a = solve_moser_tardos(&events, &vars, seed, 200_000).unwrap();
        let b = solve_moser_tardos(&events, &vars, seed, 200_000).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn acceptance_means_nonnegative_margins((n, raw) in instance(), den in 2i64..12) {
        let (vars, events) = build(n, &raw);
        let r = vec![ratio::from_ratio(1, den); events.len()];
        match check_condition(&events, &vars, &r, &ratio::from_int(1)).unwrap() {
            Verdict::Accepted(cert) => {
                prop_assert!(cert.margins.iter().all(|m| *m >= Rational::from_integer(0.into())));
            }
            Verdict::Refused(refusal) => {
                let event = events.iter().find(|e| e.id() == refusal.event).unwrap();
                prop_assert_eq!(event_probability(event, &vars).unwrap(), refusal.probability.clone());
                prop_assert!(refusal.probability > refusal.bound);
            }
        }
    }

    #[test]
    fn instance_text_round_trips((n, raw) in instance()) {
        let (vars, events) = build(n, &raw);
        let text = write_instance(&vars, &events);
        let (vars2, events2) = parse_instance(&text).unwrap();
        prop_assert_eq!(write_instance(&vars2, &events2), text);
    }
}
