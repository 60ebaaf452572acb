use lovasz_core::effective::{
    check_coloring, random_set_list, sets_to_partials, ColorerConfig, RandomSetParams,
    RandomSetStream,
};
use lovasz_core::ratio;
use lovasz_core::{
    color_prefix, color_prefix_with, extend_coloring, validate_sparsity, ConstraintStream, Item,
};
use proptest::prelude::*;

fn stream(seed: u64) -> RandomSetStream {
    RandomSetStream::new(
        seed,
        RandomSetParams {
            sets_per_block: 512,
            ..RandomSetParams::default()
        },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn shorter_runs_are_prefixes(seed in any::<u64>(), lo in 6u32..10, extra in 1u32..4) {
        let s = stream(seed);
        let small = color_prefix(&s, 1 << lo, seed).unwrap();
        let big = color_prefix(&s, 1 << (lo + extra), seed).unwrap();
        prop_assert!(small.committed_len() >= 1 << lo);
        prop_assert!(big.committed().starts_with(small.committed()));
    }

    #[test]
    fn extension_matches_fresh_run(seed in any::<u64>(), lo in 6u32..10) {
        let s = stream(seed);
        let small = color_prefix(&s, 1 << lo, seed).unwrap();
        let extended = extend_coloring(&small, &s, 1 << (lo + 2)).unwrap();
        let fresh = color_prefix(&s, 1 << (lo + 2), seed).unwrap();
        prop_assert_eq!(extended.committed(), fresh.committed());
    }

    #[test]
    fn every_contained_set_is_split(seed in any::<u64>(), count in 1usize..300) {
        let q = ratio::from_ratio(1, 2);
        let list = random_set_list(seed, count, 2048, 16, 8, q).unwrap();
        prop_assert!(validate_sparsity(&list, 2048).unwrap().passed());
        let c = color_prefix(&list, 2048, seed).unwrap();
        let report = check_coloring(&list, c.committed());
        prop_assert_eq!(report.checked, count);
        prop_assert!(report.passed());
    }

    #[test]
    fn set_split_iff_both_words_met(seed in any::<u64>(), bits in proptest::collection::vec(0u8..2, 512)) {
        let q = ratio::from_ratio(1, 2);
        let list = random_set_list(seed, 40, 512, 16, 4, q).unwrap();
        let words = sets_to_partials(&list).unwrap();
        let mut sets = Vec::new();
        list.for_each_within(512, &mut |item| sets.push(item));
        for set in sets {
            let j = set.id();
            let zero = words.item(2 * j).unwrap();
            let one = words.item(2 * j + 1).unwrap();
            prop_assert_eq!(set.satisfied_by(&bits), zero.satisfied_by(&bits) && one.satisfied_by(&bits));
        }
    }
}

#[test]
fn base_window_changes_nothing_about_validity() {
    let s = stream(11);
    for base in [64, 100, 256] {
        let config = ColorerConfig {
            base_window: Some(base),
            budget_scale: None,
        };
        let c = color_prefix_with(&s, 2048, 3, &config).unwrap();
        assert!(
            check_coloring(&s, c.committed()).passed(),
            "base window {base}"
        );
    }
}

#[test]
fn partial_words_color_like_sets() {
    let q = ratio::from_ratio(1, 2);
    let list = random_set_list(5, 200, 1024, 16, 4, q).unwrap();
    let words = sets_to_partials(&list).unwrap();
    let c = color_prefix(&words, 1024, 5).unwrap();
    assert!(check_coloring(&words, c.committed()).passed());
    assert!(check_coloring(&list, c.committed()).passed());
    assert!(matches!(words.item(1), Some(Item::Word(_))));
}
