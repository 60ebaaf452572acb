use lovasz_core::hindman::{
    build_stream_comp, build_stream_main, builtin_addition_like, choose_m, f_image, gen_family,
    pair, unpair, FamilyMode, FamilyParams, SizeRule, StreamMode,
};
use lovasz_core::ratio;
use lovasz_core::validate_sparsity;
use proptest::prelude::*;

proptest! {
    #[test]
    fn pairing_is_a_bijection(i in 0usize..100_000, s in 0usize..100_000) {
        prop_assert_eq!(unpair(pair(i, s)), (i, s));
    }

    #[test]
    fn unpair_then_pair(z in 0usize..1 << 40) {
        let (i, s) = unpair(z);
        prop_assert_eq!(pair(i, s), z);
    }

    #[test]
    fn addition_like_axioms(name in prop_oneof![Just("sum"), Just("absdiff")], x in 0usize..400, n in 0usize..400) {
        let f = builtin_addition_like(name).unwrap();
        let g = f.growth(x, n);
        // beyond g every value exceeds n
        for y in g + 1..g + 200 {
            if y != x {
                prop_assert!(f.eval(x, y) > n, "{name}: f({x},{y}) <= {n}");
            }
        }
        // at most b solutions, and the oracle lists exactly them
        let mut brute: Vec<usize> = (0..=g.max(n) + 1).filter(|&z| z != x && f.eval(x, z) == n).collect();
        brute.sort_unstable();
        let mut listed = f.solutions(x, n);
        listed.sort_unstable();
        prop_assert_eq!(&listed, &brute);
        prop_assert!(brute.len() <= f.mult_bound());
    }

    #[test]
    fn images_are_sets(x in proptest::collection::btree_set(0usize..200, 1..10), y in 200usize..400) {
        let set: Vec<usize> = x.into_iter().collect();
        let sum = builtin_addition_like("sum").unwrap();
        let image = f_image(sum.as_ref(), &set, y).unwrap();
        prop_assert_eq!(image.len(), set.len());
        prop_assert!(image.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn least_sizes() {
    let half = ratio::from_ratio(1, 2);
    assert_eq!(choose_m(1, &half, SizeRule::Comp).unwrap(), 4);
    assert_eq!(choose_m(1, &half, SizeRule::Main).unwrap(), 16);
    assert_eq!(choose_m(2, &half, SizeRule::Main).unwrap(), 19);
}

#[test]
fn small_streams_respect_their_count_bounds() {
    let half = ratio::from_ratio(1, 2);
    for seed in 0..3 {
        let params = FamilyParams::for_threshold(FamilyMode::Ce, 4, 1);
        let family = gen_family(seed, 8, 1024, FamilyMode::Ce, &params).unwrap();
        let stream = build_stream_comp(&family, 4, &half).unwrap();
        let report = validate_sparsity(&stream, 1024).unwrap();
        assert!(report.passed());
        for ((m, n), count) in report.counts {
            assert!(
                count <= m as u64,
                "comp: {count} sets of size {m} through {n}"
            );
        }
        for (name, m) in [("sum", 16), ("absdiff", 19)] {
            let f = builtin_addition_like(name).unwrap();
            let b = f.mult_bound();
            let params = FamilyParams::for_threshold(FamilyMode::Sigma2, m, b);
            let family = gen_family(seed, 6, 2048, FamilyMode::Sigma2, &params).unwrap();
            let stream = build_stream_main(&family, f, m, &half).unwrap();
            let report = validate_sparsity(&stream, 2048).unwrap();
            assert!(report.passed(), "{name}");
            for ((size, n), count) in report.counts {
                assert!(
                    count <= (b * size * size) as u64,
                    "{name}: {count} at ({size}, {n})"
                );
            }
        }
    }
}

/// Members that settle early keep emitting through the later half of the stages.
#[test]
fn early_stabilizers_emit_late() {
    let half = ratio::from_ratio(1, 2);
    let stages = 2048;
    for (name, m) in [("sum", 16), ("absdiff", 19)] {
        let f = builtin_addition_like(name).unwrap();
        let params = FamilyParams::for_threshold(FamilyMode::Sigma2, m, f.mult_bound());
        let family = gen_family(4, 10, stages, FamilyMode::Sigma2, &params).unwrap();
        let stream =
            build_stream_main(&family, builtin_addition_like(name).unwrap(), m, &half).unwrap();
        let mut early = 0;
        for i in 0..10 {
            let last = stream.schedule(i).last();
            if last.elems.is_empty() || last.start > stages / 4 {
                continue;
            }
            early += 1;
            let emitted = (stages / 2..stages)
                .filter(|&s| stream.emitted_by(i, s).is_some())
                .count();
            assert!(
                emitted > 0,
                "{name}: member {i} settled at {} but emits nothing late",
                last.start
            );
        }
        assert!(early > 0, "{name}: no member settled early");
    }
}

#[test]
fn mode_mismatch_is_rejected() {
    let half = ratio::from_ratio(1, 2);
    let params = FamilyParams::for_threshold(FamilyMode::Sigma2, 16, 1);
    let family = gen_family(1, 3, 256, FamilyMode::Sigma2, &params).unwrap();
    assert!(build_stream_comp(&family, 4, &half).is_err());
    assert_eq!(StreamMode::Main.family_mode(), FamilyMode::Sigma2);
    let err = build_stream_main(
        &family,
        builtin_addition_like("absdiff").unwrap(),
        18,
        &half,
    )
    .unwrap_err();
    assert!(err.to_string().contains("19"), "{err}");
}
