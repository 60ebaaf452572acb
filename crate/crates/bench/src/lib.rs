//! Workloads shared by the benches.

use lovasz_core::effective::RandomSetParams;
use lovasz_core::hindman::{build_stream_comp, gen_family, FamilyMode, FamilyParams, PairStream};
use lovasz_core::lll::{CompiledInstance, InstanceBuilder, Row};
use lovasz_core::{ratio, seed, RandomSetStream};

/// `events` random `width`-variable events over `vars` fair bits, each
/// forbidding one constant value. Density is set by the caller.
pub fn random_instance(seed: u64, vars: usize, events: usize, width: usize) -> CompiledInstance {
    assert!(width <= vars);
    let mut builder = InstanceBuilder::with_fair_bits(vars);
    for e in 0..events as u64 {
        let mut support: Vec<u32> = Vec::with_capacity(width);
        let mut counter = 0;
        while support.len() < width {
            let v = (seed::draw(seed, e, counter) % vars as u64) as u32;
            counter += 1;
            if !support.contains(&v) {
                support.push(v);
            }
        }
        support.sort_unstable();
        let value = (seed::draw(seed, e, counter) >> 63) as u32;
        builder.add_event(&support, [Row::Constant(value)]);
    }
    builder.build()
}

pub fn set_stream(seed: u64, sets_per_block: usize) -> RandomSetStream {
    RandomSetStream::new(
        seed,
        RandomSetParams {
            sets_per_block,
            ..RandomSetParams::default()
        },
    )
    .expect("valid parameters")
}

/// Translate stream of a `members`-member c.e. family at the least size, 4.
pub fn comp_stream(seed: u64, members: usize, stages: usize) -> PairStream {
    let params = FamilyParams::for_threshold(FamilyMode::Ce, 4, 1);
    let family =
        gen_family(seed, members, stages, FamilyMode::Ce, &params).expect("valid parameters");
    build_stream_comp(&family, 4, &ratio::from_ratio(1, 2)).expect("M = 4 is admissible at q = 1/2")
}
