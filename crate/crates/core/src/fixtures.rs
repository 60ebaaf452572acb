//! Small bundled instances used by the demos and tests.

use crate::lll::{Event, VarSpec};

/// Three pairwise-overlapping events over six fair bits, each forbidding a
/// single assignment of three bits (probability 1/8 each).
///
/// Supports are `{0,1,2}`, `{2,3,4}` and `{4,5,0}`.
pub fn three_event_fixture() -> (Vec<VarSpec>, Vec<Event>) {
    let vars = (0..6).map(VarSpec::fair_bit).collect();
    let events = [[0, 1, 2], [2, 3, 4], [0, 4, 5]]
        .into_iter()
        .enumerate()
        .map(|(id, vbl)| {
            Event::new(id, vbl.to_vec(), vec![vec![1, 1, 1]]).expect("well-formed fixture")
        })
        .collect();
    (vars, events)
}
