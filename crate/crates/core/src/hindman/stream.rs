//! Streams of the sets `f(E_i[s], s)`.
//!
//! Pairs `(i, s)` are visited in Cantor order. In `comp` mode every pair
//! with `E_i` defined by stage `s` emits the translate `E_i + s`. In `main`
//! mode a pair with `E = E_i[s]` nonempty, stable since `s0`, emits
//! `F = f(E, s)` when `min F > s0` and `min F` exceeds `max f(E_i[u], u)` for
//! every earlier stage `u < s0` with `E_i[u]` nonempty. Repeated sets keep the
//! id of their first occurrence. Item ids number the distinct emitted sets in
//! visiting order; they are materialized on demand, one diagonal at a time.

use std::cell::RefCell;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};

use super::estate::{e_size, member_schedule};
use super::{
    choose_m, AdditionLike, FamilyMode, HindmanError, MemberSchedule, SizeRule, StagedFamily, Sum,
};
use crate::effective::{fingerprint_of, ConstraintStream, Item, StreamKind};
use crate::ratio::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamMode {
    /// Translates `E_i + s` of a monotone family.
    Comp,
    /// Images `f(E_i[s], s)` of a stagewise family.
    Main,
}

impl StreamMode {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamMode::Comp => "comp",
            StreamMode::Main => "main",
        }
    }

    pub fn family_mode(self) -> FamilyMode {
        match self {
            StreamMode::Comp => FamilyMode::Ce,
            StreamMode::Main => FamilyMode::Sigma2,
        }
    }

    pub fn size_rule(self) -> SizeRule {
        match self {
            StreamMode::Comp => SizeRule::Comp,
            StreamMode::Main => SizeRule::Main,
        }
    }
}

const NONE: u32 = u32::MAX;

#[derive(Debug, Default)]
struct Materialized {
    /// Diagonals `0..next_diag` are done.
    next_diag: usize,
    /// Emitting pair of each id.
    origins: Vec<(u32, u32)>,
    lens: Vec<u32>,
    /// `ids[i][s]`: id emitted by pair `(i, s)` or `NONE`.
    ids: Vec<Vec<u32>>,
    by_hash: HashMap<u64, Vec<u32>>,
}

struct Member {
    schedule: MemberSchedule,
    /// Per segment: max of `max f(E_u, u)` over earlier stages with `E_u` nonempty.
    prior_max: Vec<Option<usize>>,
    /// Per segment: largest value `f(E, u)` takes inside it (`None` when unbounded).
    image_max: Vec<Option<usize>>,
}

/// The set stream of either construction.
pub struct PairStream {
    mode: StreamMode,
    f: Box<dyn AdditionLike>,
    min_size: usize,
    q: Rational,
    family_fingerprint: String,
    members: Vec<Member>,
    /// Possible item sizes, ascending.
    sizes: Vec<usize>,
    /// Last diagonal that can emit, for finite streams.
    last_diag: Option<usize>,
    state: RefCell<Materialized>,
}

impl std::fmt::Debug for PairStream {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("PairStream")
            .field("mode", &self.mode)
            .field("f", &self.f.name())
            .field("min_size", &self.min_size)
            .field("members", &self.members.len())
            .finish()
    }
}

fn check_min_size(
    mode: StreamMode,
    f: &dyn AdditionLike,
    min_size: usize,
    q: &Rational,
) -> Result<(), HindmanError> {
    let least = choose_m(f.mult_bound(), q, mode.size_rule())?.max(1);
    if min_size < least {
        return Err(HindmanError::InvalidParameter {
            message: format!(
                "M = {min_size} is below the least admissible M = {least} for {} mode with {} (b = {})",
                mode.as_str(),
                f.name(),
                f.mult_bound()
            ),
            least_admissible: Some(least),
        });
    }
    Ok(())
}

/// Translates `E_i + s` of a `ce` family at sparsity rate `q` (normally 1/2).
pub fn build_stream_comp(
    family: &StagedFamily,
    min_size: usize,
    q: &Rational,
) -> Result<PairStream, HindmanError> {
    if family.mode() != FamilyMode::Ce {
        return Err(HindmanError::InvalidInput(
            "comp streams need a ce family".into(),
        ));
    }
    check_min_size(StreamMode::Comp, &Sum, min_size, q)?;
    Ok(PairStream::new(
        StreamMode::Comp,
        family,
        Box::new(Sum),
        min_size,
        q.clone(),
    ))
}

/// Images `f(E_i[s], s)` of a `sigma2` family at sparsity rate `q` (normally 1/2).
pub fn build_stream_main(
    family: &StagedFamily,
    f: Box<dyn AdditionLike>,
    min_size: usize,
    q: &Rational,
) -> Result<PairStream, HindmanError> {
    if family.mode() != FamilyMode::Sigma2 {
        return Err(HindmanError::InvalidInput(
            "main streams need a sigma2 family".into(),
        ));
    }
    check_min_size(StreamMode::Main, f.as_ref(), min_size, q)?;
    Ok(PairStream::new(
        StreamMode::Main,
        family,
        f,
        min_size,
        q.clone(),
    ))
}

impl PairStream {
    fn new(
        mode: StreamMode,
        family: &StagedFamily,
        f: Box<dyn AdditionLike>,
        min_size: usize,
        q: Rational,
    ) -> Self {
        let mut sizes = BTreeSet::new();
        let mut infinite = false;
        let members: Vec<Member> = (0..family.count())
            .map(|i| {
                let schedule = member_schedule(family, f.as_ref(), min_size, i);
                let need = e_size(family.mode(), f.as_ref(), min_size, i);
                if schedule.segments.iter().any(|seg| !seg.elems.is_empty()) {
                    let smallest = match mode {
                        StreamMode::Comp => need,
                        StreamMode::Main => need.div_ceil(f.mult_bound()),
                    };
                    sizes.extend(smallest..=need);
                }
                infinite |= !schedule.last().elems.is_empty();
                let (prior_max, image_max) = segment_maxima(&schedule, f.as_ref());
                let prior_max = match mode {
                    StreamMode::Comp => vec![None; schedule.segments.len()],
                    StreamMode::Main => prior_max,
                };
                Member {
                    schedule,
                    prior_max,
                    image_max,
                }
            })
            .collect();
        let last_diag =
            (!infinite).then(|| family.count().saturating_sub(1) + family.stage_count());
        let state = Materialized {
            ids: vec![Vec::new(); members.len()],
            ..Materialized::default()
        };
        let family_fingerprint = family.fingerprint();
        PairStream {
            mode,
            f,
            min_size,
            q,
            family_fingerprint,
            members,
            sizes: sizes.into_iter().collect(),
            last_diag,
            state: RefCell::new(state),
        }
    }

    pub fn mode(&self) -> StreamMode {
        self.mode
    }

    pub fn function(&self) -> &dyn AdditionLike {
        self.f.as_ref()
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn schedule(&self, i: usize) -> &MemberSchedule {
        &self.members[i].schedule
    }

    /// Whether the stream has finitely many items.
    pub fn is_finite(&self) -> bool {
        self.last_diag.is_some()
    }

    /// The set pair `(i, s)` would emit, before duplicate suppression.
    pub fn emitted_by(&self, i: usize, s: usize) -> Option<Vec<usize>> {
        let member = &self.members[i];
        let k = member.schedule.index_at(s);
        let seg = &member.schedule.segments[k];
        if seg.elems.is_empty() {
            return None;
        }
        let image = image_of(self.f.as_ref(), &seg.elems, s);
        if self.mode == StreamMode::Main {
            let min = image[0];
            if min <= seg.start || member.prior_max[k].is_some_and(|p| min <= p) {
                return None;
            }
        }
        Some(image)
    }

    /// The pair `(member, stage)` that first emitted item `j`.
    pub fn origin(&self, j: usize) -> Option<(usize, usize)> {
        self.ensure_id(j);
        self.state
            .borrow()
            .origins
            .get(j)
            .map(|&(i, s)| (i as usize, s as usize))
    }

    /// Item id emitted by pair `(i, s)`, `None` if it emitted nothing new.
    pub fn id_of(&self, i: usize, s: usize) -> Option<usize> {
        if i >= self.members.len() {
            return None;
        }
        self.materialize_through(i + s);
        let id = self.state.borrow().ids[i][s];
        (id != NONE).then_some(id as usize)
    }

    /// Items materialized so far.
    pub fn materialized_len(&self) -> usize {
        self.state.borrow().origins.len()
    }

    fn ensure_id(&self, j: usize) {
        while self.state.borrow().origins.len() <= j {
            let next = self.state.borrow().next_diag;
            if self.last_diag.is_some_and(|last| next > last) {
                return;
            }
            self.materialize_through(next);
        }
    }

    fn materialize_through(&self, diag: usize) {
        let mut state = self.state.borrow_mut();
        let count = self.members.len();
        while state.next_diag <= diag {
            let d = state.next_diag;
            // pi(i, s) increases with s along a diagonal
            for s in (d + 1).saturating_sub(count)..=d {
                let i = d - s;
                let id = match self.emitted_by(i, s) {
                    None => NONE,
                    Some(set) => self.register(&mut state, i, s, &set),
                };
                debug_assert_eq!(state.ids[i].len(), s);
                state.ids[i].push(id);
            }
            state.next_diag += 1;
        }
    }

    fn register(&self, state: &mut Materialized, i: usize, s: usize, set: &[usize]) -> u32 {
        let mut hasher = DefaultHasher::new();
        set.hash(&mut hasher);
        let h = hasher.finish();
        if let Some(existing) = state.by_hash.get(&h) {
            for &other in existing {
                let (oi, os) = state.origins[other as usize];
                if self.emitted_by(oi as usize, os as usize).as_deref() == Some(set) {
                    return NONE;
                }
            }
        }
        let id = u32::try_from(state.origins.len()).expect("fewer than 2^32 items");
        assert!(id != NONE, "item ids exhausted");
        state.origins.push((i as u32, s as u32));
        state.lens.push(set.len() as u32);
        state.by_hash.entry(h).or_default().push(id);
        id
    }

    /// `(size, id)` of every item containing `n`, from members whose `E`
    /// size passes `member_filter`; may repeat entries.
    fn ids_through(&self, n: usize, member_filter: impl Fn(usize) -> bool) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, member) in self.members.iter().enumerate() {
            let need = e_size(self.mode.family_mode(), self.f.as_ref(), self.min_size, i);
            if !member_filter(need) {
                continue;
            }
            for (k, seg) in member.schedule.segments.iter().enumerate() {
                if seg.elems.is_empty() || member.image_max[k].is_some_and(|top| top < n) {
                    continue;
                }
                let end = member.schedule.end(k).unwrap_or(usize::MAX);
                for &x in &seg.elems {
                    for t in self.f.solutions(x, n) {
                        if t < seg.start || t >= end {
                            continue;
                        }
                        if let Some(id) = self.id_of(i, t) {
                            out.push((self.state.borrow().lens[id] as usize, id));
                        }
                    }
                }
            }
        }
        out
    }

    /// Stage beyond which no pair emits a set meeting `[0, n]`.
    fn stage_bound(&self, n: usize) -> usize {
        let mut bound = n;
        for member in &self.members {
            for seg in &member.schedule.segments {
                for &x in &seg.elems {
                    bound = bound.max(self.f.growth(x, n));
                }
            }
        }
        bound + 1
    }
}

fn image_of(f: &dyn AdditionLike, elems: &[usize], s: usize) -> Vec<usize> {
    let mut image: Vec<usize> = elems.iter().map(|&x| f.eval(x, s)).collect();
    image.sort_unstable();
    image.dedup();
    image
}

/// Per segment: the running maximum of images before it, and its own maximum.
fn segment_maxima(
    schedule: &MemberSchedule,
    f: &dyn AdditionLike,
) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let mut prior = Vec::with_capacity(schedule.segments.len());
    let mut own = Vec::with_capacity(schedule.segments.len());
    let mut running: Option<usize> = None;
    for (k, seg) in schedule.segments.iter().enumerate() {
        prior.push(running);
        let end = schedule.end(k);
        if seg.elems.is_empty() || end.is_none() {
            own.push(None);
            continue;
        }
        let top = (seg.start..end.unwrap())
            .map(|u| {
                seg.elems
                    .iter()
                    .map(|&x| f.eval(x, u))
                    .max()
                    .expect("nonempty")
            })
            .max()
            .expect("segments are nonempty ranges");
        own.push(Some(top));
        running = Some(running.map_or(top, |r| r.max(top)));
    }
    (prior, own)
}

impl ConstraintStream for PairStream {
    fn kind(&self) -> StreamKind {
        StreamKind::Sets
    }

    fn min_size(&self) -> usize {
        self.min_size
    }

    fn q(&self) -> Rational {
        self.q.clone()
    }

    fn item(&self, j: usize) -> Option<Item> {
        let (i, s) = self.origin(j)?;
        let elems = self.emitted_by(i, s).expect("materialized pairs emit");
        Some(Item::Set { id: j, elems })
    }

    fn locality(&self, m: usize, n: usize) -> Vec<usize> {
        self.locality_by_size(n, &[m])
            .pop()
            .map(|(_, ids)| ids)
            .unwrap_or_default()
    }

    fn locality_by_size(&self, n: usize, sizes: &[usize]) -> Vec<(usize, Vec<usize>)> {
        let (lo, hi) = match (sizes.iter().min(), sizes.iter().max()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Vec::new(),
        };
        let mut found: Vec<(usize, usize)> = self
            .ids_through(n, |need| {
                need >= lo && need.div_ceil(self.f.mult_bound()) <= hi
            })
            .into_iter()
            .filter(|(m, _)| sizes.contains(m))
            .collect();
        // a set emitted first by another pair is reported through that pair
        found.sort_unstable();
        found.dedup();
        let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
        for (m, id) in found {
            match out.last_mut() {
                Some((last, ids)) if *last == m => ids.push(id),
                _ => out.push((m, vec![id])),
            }
        }
        out
    }

    fn candidate_sizes(&self, window: usize) -> Vec<usize> {
        self.sizes
            .iter()
            .copied()
            .filter(|&m| m <= window)
            .collect()
    }

    fn for_each_within(&self, window: usize, visit: &mut dyn FnMut(Item)) {
        if window == 0 {
            return;
        }
        let bound = self.stage_bound(window - 1);
        let last = self.members.len().saturating_sub(1) + bound;
        self.materialize_through(last);
        let total = self.materialized_len();
        for j in 0..total {
            let (i, s) = self.state.borrow().origins[j];
            if s as usize >= bound {
                continue;
            }
            let elems = self
                .emitted_by(i as usize, s as usize)
                .expect("materialized pairs emit");
            if elems[elems.len() - 1] < window {
                visit(Item::Set { id: j, elems });
            }
        }
    }

    fn fingerprint(&self) -> String {
        let desc = format!("{} {} {}", self.mode.as_str(), self.f.name(), self.min_size);
        fingerprint_of(["pair-stream", &desc, &self.family_fingerprint])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::validate_sparsity;
    use crate::hindman::{builtin_addition_like, gen_family, pair, AbsDiff, FamilyParams};

    fn half() -> Rational {
        crate::ratio::from_ratio(1, 2)
    }

    fn ce_fixture() -> StagedFamily {
        // member 0 (k = 4): {0, 2, 5, 7} complete at stage 8; member 1 (k = 5) never completes
        StagedFamily::new(
            FamilyMode::Ce,
            40,
            vec![
                vec![(6, vec![0, 2, 5]), (8, vec![0, 2, 5, 7])],
                vec![(3, vec![0, 1])],
            ],
        )
        .unwrap()
    }

    #[test]
    fn comp_emits_translates_in_pairing_order() {
        let s = build_stream_comp(&ce_fixture(), 4, &half()).unwrap();
        assert!(!s.is_finite());
        assert_eq!(
            s.item(0),
            Some(Item::Set {
                id: 0,
                elems: vec![8, 10, 13, 15]
            })
        );
        assert_eq!(s.origin(0), Some((0, 8)));
        assert_eq!(s.origin(1), Some((0, 9)));
        assert_eq!(s.locality(4, 8), vec![0]);
        assert_eq!(s.locality(4, 16).len(), 4);
        assert!(s.locality(5, 16).is_empty());
        assert!(s.locality(4, 3).is_empty());
        for n in 0..200 {
            assert!(s.locality(4, n).len() <= 4);
        }
    }

    #[test]
    fn low_m_is_refused_with_least_value() {
        let fam = gen_family(
            1,
            3,
            100,
            FamilyMode::Sigma2,
            &FamilyParams::for_threshold(FamilyMode::Sigma2, 19, 2),
        )
        .unwrap();
        match build_stream_main(&fam, Box::new(AbsDiff), 18, &half()) {
            Err(HindmanError::InvalidParameter {
                least_admissible: Some(19),
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            build_stream_comp(&ce_fixture(), 3, &half()),
            Err(HindmanError::InvalidParameter {
                least_admissible: Some(4),
                ..
            })
        ));
        assert!(build_stream_comp(&fam, 4, &half()).is_err());
    }

    #[test]
    fn streams_are_consistent_and_sparse() {
        for (name, m) in [("sum", 16), ("absdiff", 19)] {
            let f = builtin_addition_like(name).unwrap();
            let mut params = FamilyParams::for_threshold(FamilyMode::Sigma2, m, f.mult_bound());
            params.value_span = 120;
            params.entry_jitter = 20;
            let fam = gen_family(4, 5, 1200, FamilyMode::Sigma2, &params).unwrap();
            let s = build_stream_main(&fam, f, m, &half()).unwrap();
            let report = validate_sparsity(&s, 700).unwrap();
            assert!(report.passed());
            assert!(report.items_checked > 0, "{name}");
            let b = s.function().mult_bound() as u64;
            for (&(m, _), &c) in &report.counts {
                assert!(c <= b * (m * m) as u64);
            }
        }
        let fam = gen_family(
            2,
            8,
            2000,
            FamilyMode::Ce,
            &FamilyParams::for_threshold(FamilyMode::Ce, 4, 1),
        )
        .unwrap();
        let s = build_stream_comp(&fam, 4, &half()).unwrap();
        let report = validate_sparsity(&s, 900).unwrap();
        assert!(report.passed());
        for (&(m, _), &c) in &report.counts {
            assert!(c <= m as u64);
        }
    }

    #[test]
    fn no_duplicates_and_sizes() {
        let f = builtin_addition_like("absdiff").unwrap();
        let fam = gen_family(
            6,
            6,
            1500,
            FamilyMode::Sigma2,
            &FamilyParams::for_threshold(FamilyMode::Sigma2, 19, 2),
        )
        .unwrap();
        let s = build_stream_main(&fam, f, 19, &half()).unwrap();
        let mut seen = BTreeSet::new();
        s.for_each_within(1200, &mut |item| {
            let (i, _) = s.origin(item.id()).unwrap();
            assert!(item.len() >= 19 + i);
            assert!(seen.insert(item.dom().to_vec()), "duplicate set");
        });
    }

    #[test]
    fn ids_follow_pairing_order() {
        let fam = gen_family(
            3,
            4,
            600,
            FamilyMode::Sigma2,
            &FamilyParams::for_threshold(FamilyMode::Sigma2, 16, 1),
        )
        .unwrap();
        let s =
            build_stream_main(&fam, builtin_addition_like("sum").unwrap(), 16, &half()).unwrap();
        s.materialize_through(700);
        let n = s.materialized_len();
        let keys: Vec<usize> = (0..n)
            .map(|j| s.origin(j).map(|(i, t)| pair(i, t)).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn stabilized_members_emit_in_top_half() {
        let f = builtin_addition_like("sum").unwrap();
        let stages = 4000;
        let fam = gen_family(
            8,
            10,
            stages,
            FamilyMode::Sigma2,
            &FamilyParams::for_threshold(FamilyMode::Sigma2, 16, 1),
        )
        .unwrap();
        let s = build_stream_main(&fam, f, 16, &half()).unwrap();
        let mut checked = 0;
        for i in 0..10 {
            let last = s.schedule(i).last();
            if last.elems.is_empty() || last.start > stages / 4 {
                continue;
            }
            for t in stages / 2..stages {
                assert!(s.emitted_by(i, t).is_some(), "member {i} stage {t}");
            }
            checked += 1;
        }
        assert!(checked > 0);
    }
}
