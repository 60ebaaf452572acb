//! Selection of the candidate sets `E_i[s]`.
//!
//! `ce` members: the first `M + i` elements in enumeration order (entry
//! stage, then value), once that many have appeared. `sigma2` members: with
//! `t_x` the stage since which `x` has been present without interruption,
//! the least `b (M + i)` elements under `(t_x, x)`, or nothing if the member
//! has fewer elements at stage `s`.

use std::collections::HashMap;

use super::{AdditionLike, FamilyMode, HindmanError, StagedFamily};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EState {
    pub i: usize,
    pub s: usize,
    /// Sorted; empty when undefined.
    pub elements: Vec<usize>,
    /// Least stage with `E_i[t] = E_i[s]` for all `t` in `[s0, s]`.
    pub s0: usize,
}

/// Number of elements `E_i` takes.
pub fn e_size(mode: FamilyMode, f: &dyn AdditionLike, min_size: usize, i: usize) -> usize {
    match mode {
        FamilyMode::Ce => min_size + i,
        FamilyMode::Sigma2 => f.mult_bound() * (min_size + i),
    }
}

fn select_at(family: &StagedFamily, need: usize, i: usize, s: usize) -> Vec<usize> {
    let present = family.member_at(i, s);
    if present.len() < need {
        return Vec::new();
    }
    let mut keyed: Vec<(usize, usize)> = present
        .iter()
        .map(|&x| {
            let since = match family.mode() {
                // entry stage: first stage containing x
                FamilyMode::Ce => (0..=s)
                    .find(|&u| family.member_at(i, u).binary_search(&x).is_ok())
                    .unwrap(),
                // start of the current uninterrupted run
                FamilyMode::Sigma2 => {
                    let mut t = s;
                    while t > 0 && family.member_at(i, t - 1).binary_search(&x).is_ok() {
                        t -= 1;
                    }
                    t
                }
            };
            (since, x)
        })
        .collect();
    keyed.sort_unstable();
    let mut chosen: Vec<usize> = keyed[..need].iter().map(|&(_, x)| x).collect();
    chosen.sort_unstable();
    chosen
}

/// Direct stage-by-stage evaluation of `E_i[s]`.
pub fn e_state(
    family: &StagedFamily,
    f: &dyn AdditionLike,
    min_size: usize,
    i: usize,
    s: usize,
) -> Result<EState, HindmanError> {
    if s >= family.stage_count() {
        return Err(HindmanError::StageOutOfRange {
            stage: s,
            stage_count: family.stage_count(),
        });
    }
    if i >= family.count() {
        return Err(HindmanError::InvalidInput(format!(
            "member {i} out of range"
        )));
    }
    let need = e_size(family.mode(), f, min_size, i);
    let elements = select_at(family, need, i, s);
    let mut s0 = s;
    while s0 > 0 && select_at(family, need, i, s0 - 1) == elements {
        s0 -= 1;
    }
    Ok(EState { i, s, elements, s0 })
}

/// A maximal run of stages `[start, next start)` sharing one `E` set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub elems: Vec<usize>,
}

/// `E_i[s]` for all stages, as constant segments; the last segment extends forever.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberSchedule {
    pub segments: Vec<Segment>,
}

impl MemberSchedule {
    /// Index of the segment containing stage `s`.
    pub fn index_at(&self, s: usize) -> usize {
        self.segments.partition_point(|seg| seg.start <= s) - 1
    }

    pub fn at(&self, s: usize) -> &Segment {
        &self.segments[self.index_at(s)]
    }

    /// End (exclusive) of segment `k`, `None` for the last.
    pub fn end(&self, k: usize) -> Option<usize> {
        self.segments.get(k + 1).map(|seg| seg.start)
    }

    pub fn last(&self) -> &Segment {
        self.segments.last().expect("schedule has a segment")
    }
}

/// Computes the schedule of member `i` from its change points.
pub fn member_schedule(
    family: &StagedFamily,
    f: &dyn AdditionLike,
    min_size: usize,
    i: usize,
) -> MemberSchedule {
    let need = e_size(family.mode(), f, min_size, i);
    let mut segments = vec![Segment {
        start: 0,
        elems: Vec::new(),
    }];
    let mut since: HashMap<usize, usize> = HashMap::new();
    let mut order: Vec<usize> = Vec::new();
    for (stage, set) in family.changes(i) {
        let elems = match family.mode() {
            FamilyMode::Ce => {
                let mut fresh: Vec<usize> = set
                    .iter()
                    .copied()
                    .filter(|x| !since.contains_key(x))
                    .collect();
                fresh.sort_unstable();
                for &x in &fresh {
                    since.insert(x, *stage);
                }
                order.extend(fresh);
                if order.len() >= need {
                    let mut e = order[..need].to_vec();
                    e.sort_unstable();
                    e
                } else {
                    Vec::new()
                }
            }
            FamilyMode::Sigma2 => {
                since = set
                    .iter()
                    .map(|&x| (x, since.get(&x).copied().unwrap_or(*stage)))
                    .collect();
                if set.len() >= need {
                    let mut keyed: Vec<(usize, usize)> =
                        set.iter().map(|&x| (since[&x], x)).collect();
                    keyed.sort_unstable();
                    let mut e: Vec<usize> = keyed[..need].iter().map(|&(_, x)| x).collect();
                    e.sort_unstable();
                    e
                } else {
                    Vec::new()
                }
            }
        };
        let last = segments.last_mut().expect("nonempty");
        if last.elems != elems {
            if last.start == *stage {
                last.elems = elems;
            } else {
                segments.push(Segment {
                    start: *stage,
                    elems,
                });
            }
        }
    }
    MemberSchedule { segments }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hindman::{gen_family, AbsDiff, FamilyParams, Sum};

    #[test]
    fn ce_takes_first_enumerated() {
        // enumerates 5 (stage 6), 3 (stage 7), 9 (stage 10), 1 (stage 11)
        let fam = StagedFamily::new(
            FamilyMode::Ce,
            20,
            vec![vec![
                (6, vec![5]),
                (7, vec![3, 5]),
                (10, vec![3, 5, 9]),
                (11, vec![1, 3, 5, 9]),
            ]],
        )
        .unwrap();
        let e = e_state(&fam, &Sum, 3, 0, 15).unwrap();
        assert_eq!(e.elements, vec![3, 5, 9]);
        assert_eq!(e.s0, 10);
        assert!(e_state(&fam, &Sum, 3, 0, 9).unwrap().elements.is_empty());
        assert!(e_state(&fam, &Sum, 3, 0, 20).is_err());
    }

    #[test]
    fn tenure_orders_sigma2() {
        // y = 1 enters at 2, leaves at 4, re-enters at 6; x = 0 enters at 3 and stays
        let fam = StagedFamily::new(
            FamilyMode::Sigma2,
            12,
            vec![vec![
                (2, vec![1]),
                (3, vec![0, 1]),
                (4, vec![0]),
                (6, vec![0, 1]),
            ]],
        )
        .unwrap();
        // need b (M + i) = 1 element with M = 1: x = 0 has t = 3 < t_y = 6
        let e = e_state(&fam, &Sum, 1, 0, 9).unwrap();
        assert_eq!(e.elements, vec![0]);
        assert_eq!(e.s0, 4);
        // at stage 3 y has the longer tenure
        assert_eq!(e_state(&fam, &Sum, 1, 0, 3).unwrap().elements, vec![1]);
        // two elements with b = 2: sizes come in multiples of b
        assert_eq!(
            e_state(&fam, &AbsDiff, 1, 0, 9).unwrap().elements,
            vec![0, 1]
        );
        assert!(e_state(&fam, &AbsDiff, 1, 0, 4)
            .unwrap()
            .elements
            .is_empty());
    }

    #[test]
    fn schedule_agrees_with_direct_evaluation() {
        for (mode, seed) in [
            (FamilyMode::Ce, 1),
            (FamilyMode::Sigma2, 2),
            (FamilyMode::Sigma2, 3),
        ] {
            let mut params = FamilyParams::for_threshold(mode, 2, 1);
            params.value_span = 40;
            params.entry_jitter = 10;
            let fam = gen_family(seed, 4, 240, mode, &params).unwrap();
            for i in 0..4 {
                let sched = member_schedule(&fam, &Sum, 2, i);
                for s in 0..240 {
                    let direct = e_state(&fam, &Sum, 2, i, s).unwrap();
                    let seg = sched.at(s);
                    assert_eq!(seg.elems, direct.elements, "{mode:?} i={i} s={s}");
                    assert_eq!(seg.start, direct.s0, "{mode:?} i={i} s={s}");
                }
            }
        }
    }
}
