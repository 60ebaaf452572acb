//! Constraint streams over the naturals and the online 2-colorer.
//!
//! A stream is a lazily enumerable sequence of finite sets (a set is
//! satisfied when it is not monochromatic) or finite partial words (a word is
//! satisfied when the coloring agrees with it somewhere), together with a
//! locality oracle answering "which items of size `m` contain `n`".

mod colorer;
pub mod manifest;
mod synthetic;

use std::collections::{BTreeMap, HashMap};

use num_traits::One;
use sha2::{Digest, Sha256};

use crate::ratio::{self, Rational};
pub use colorer::{
    check_coloring, color_prefix, color_prefix_with, extend_coloring, ColorerConfig, Coloring,
    CoverageReport, Provenance,
};
pub use synthetic::{random_set_list, RandomSetParams, RandomSetStream};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StreamError {
    #[error("invalid parameter: {message}")]
    InvalidParameter {
        message: String,
        least_admissible: Option<usize>,
    },
    #[error("stream integrity: item {item}, size {size}, point {point}: {message}")]
    Integrity {
        item: usize,
        size: usize,
        point: usize,
        message: String,
    },
    #[error("construction failed in phase {phase}: {reason} (constraints {constraints:?})")]
    ConstructionFailure {
        phase: usize,
        constraints: Vec<usize>,
        reason: String,
    },
    #[error("coloring belongs to stream {expected}, not {found}")]
    WrongStream { expected: String, found: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamKind {
    Sets,
    Partials,
}

impl StreamKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamKind::Sets => "sets",
            StreamKind::Partials => "partials",
        }
    }
}

/// A finite partial function from the naturals to bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialWord {
    pub id: usize,
    pub dom: Vec<usize>,
    pub vals: Vec<bool>,
}

impl PartialWord {
    pub fn new(id: usize, dom: Vec<usize>, vals: Vec<bool>) -> Result<Self, StreamError> {
        if dom.is_empty() || dom.len() != vals.len() || dom.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StreamError::InvalidInput(format!(
                "word {id} needs a nonempty strictly increasing domain with one value per point"
            )));
        }
        Ok(PartialWord { id, dom, vals })
    }

    pub fn constant(id: usize, dom: Vec<usize>, value: bool) -> Self {
        let vals = vec![value; dom.len()];
        PartialWord { id, dom, vals }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Item {
    /// Elements are strictly increasing.
    Set {
        id: usize,
        elems: Vec<usize>,
    },
    Word(PartialWord),
}

impl Item {
    pub fn set(id: usize, elems: Vec<usize>) -> Result<Self, StreamError> {
        if elems.is_empty() || elems.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StreamError::InvalidInput(format!(
                "set {id} must be nonempty and strictly increasing"
            )));
        }
        Ok(Item::Set { id, elems })
    }

    pub fn id(&self) -> usize {
        match self {
            Item::Set { id, .. } => *id,
            Item::Word(w) => w.id,
        }
    }

    pub fn dom(&self) -> &[usize] {
        match self {
            Item::Set { elems, .. } => elems,
            Item::Word(w) => &w.dom,
        }
    }

    pub fn len(&self) -> usize {
        self.dom().len()
    }

    pub fn is_empty(&self) -> bool {
        self.dom().is_empty()
    }

    pub fn kind(&self) -> StreamKind {
        match self {
            Item::Set { .. } => StreamKind::Sets,
            Item::Word(_) => StreamKind::Partials,
        }
    }

    pub fn contains(&self, n: usize) -> bool {
        self.dom().binary_search(&n).is_ok()
    }

    /// Sets: not monochromatic. Words: the coloring agrees somewhere.
    ///
    /// Panics if the domain reaches past `bits`.
    pub fn satisfied_by(&self, bits: &[u8]) -> bool {
        match self {
            Item::Set { elems, .. } => {
                let first = bits[elems[0]];
                elems[1..].iter().any(|&n| bits[n] != first)
            }
            Item::Word(w) => w
                .dom
                .iter()
                .zip(&w.vals)
                .any(|(&n, &v)| (bits[n] == 1) == v),
        }
    }
}

/// A pull-based stream of constraints with a locality oracle.
pub trait ConstraintStream {
    fn kind(&self) -> StreamKind;

    /// Lower bound `M` on every item's size.
    fn min_size(&self) -> usize;

    /// Sparsity rate: at most `2^(q*m)` items of size `m` through any point.
    fn q(&self) -> Rational;

    /// Item `j`, or `None` if the stream never produces index `j`.
    fn item(&self, j: usize) -> Option<Item>;

    /// Ids (ascending) of the items of size `m` containing `n`.
    fn locality(&self, m: usize, n: usize) -> Vec<usize>;

    /// `locality(m, n)` for each listed size, omitting empty answers.
    fn locality_by_size(&self, n: usize, sizes: &[usize]) -> Vec<(usize, Vec<usize>)> {
        sizes
            .iter()
            .map(|&m| (m, self.locality(m, n)))
            .filter(|(_, ids)| !ids.is_empty())
            .collect()
    }

    /// Sizes an item inside `[0, window)` can have.
    fn candidate_sizes(&self, window: usize) -> Vec<usize> {
        (self.min_size()..=window).collect()
    }

    /// Visits every item whose domain lies inside `[0, window)`.
    ///
    /// The default queries the locality oracle for each candidate size
    /// (ascending) and point (ascending), reporting an item at its least
    /// element.
    fn for_each_within(&self, window: usize, visit: &mut dyn FnMut(Item)) {
        for m in self.candidate_sizes(window) {
            if m > window {
                continue;
            }
            for n in 0..window {
                for j in self.locality(m, n) {
                    if let Some(item) = self.item(j) {
                        let dom = item.dom();
                        if dom[0] == n && dom[dom.len() - 1] < window {
                            visit(item);
                        }
                    }
                }
            }
        }
    }

    /// Stable identifier of the stream's content and parameters.
    fn fingerprint(&self) -> String;
}

impl<T: ConstraintStream + ?Sized> ConstraintStream for &T {
    fn kind(&self) -> StreamKind {
        (**self).kind()
    }
    fn min_size(&self) -> usize {
        (**self).min_size()
    }
    fn q(&self) -> Rational {
        (**self).q()
    }
    fn item(&self, j: usize) -> Option<Item> {
        (**self).item(j)
    }
    fn locality(&self, m: usize, n: usize) -> Vec<usize> {
        (**self).locality(m, n)
    }
    fn locality_by_size(&self, n: usize, sizes: &[usize]) -> Vec<(usize, Vec<usize>)> {
        (**self).locality_by_size(n, sizes)
    }
    fn candidate_sizes(&self, window: usize) -> Vec<usize> {
        (**self).candidate_sizes(window)
    }
    fn for_each_within(&self, window: usize, visit: &mut dyn FnMut(Item)) {
        (**self).for_each_within(window, visit)
    }
    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
}

/// Short hex digest of the given parts.
pub fn fingerprint_of<'a>(parts: impl IntoIterator<Item = &'a str>) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part.as_bytes());
        hasher.update([0u8]);
    }
    hasher.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn check_stream_params(min_size: usize, q: &Rational) -> Result<(), StreamError> {
    if min_size == 0 {
        return Err(StreamError::InvalidParameter {
            message: "M must be at least 1".into(),
            least_admissible: Some(1),
        });
    }
    if !ratio::in_open_unit(q) {
        return Err(StreamError::InvalidParameter {
            message: format!("q = {} outside (0,1)", ratio::format(q)),
            least_admissible: None,
        });
    }
    Ok(())
}

/// A finite, fully materialized stream with a derived locality index.
#[derive(Debug, Clone)]
pub struct ListStream {
    kind: StreamKind,
    min_size: usize,
    q: Rational,
    items: Vec<Item>,
    by_id: HashMap<usize, usize>,
    index: HashMap<(usize, usize), Vec<usize>>,
    fingerprint: String,
}

impl ListStream {
    pub fn new(
        kind: StreamKind,
        min_size: usize,
        q: Rational,
        mut items: Vec<Item>,
    ) -> Result<Self, StreamError> {
        check_stream_params(min_size, &q)?;
        items.sort_by_key(Item::id);
        let mut by_id = HashMap::with_capacity(items.len());
        let mut index: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (pos, item) in items.iter().enumerate() {
            if item.kind() != kind {
                return Err(StreamError::InvalidInput(format!(
                    "item {} is not of kind {}",
                    item.id(),
                    kind.as_str()
                )));
            }
            if item.len() < min_size {
                return Err(StreamError::Integrity {
                    item: item.id(),
                    size: item.len(),
                    point: item.dom()[0],
                    message: format!("size below M = {min_size}"),
                });
            }
            if by_id.insert(item.id(), pos).is_some() {
                return Err(StreamError::InvalidInput(format!(
                    "item id {} used twice",
                    item.id()
                )));
            }
            for &n in item.dom() {
                index.entry((item.len(), n)).or_default().push(item.id());
            }
        }
        let mut parts = vec![
            kind.as_str().to_string(),
            min_size.to_string(),
            ratio::format(&q),
        ];
        for item in &items {
            parts.push(format!("{:?}", item));
        }
        let fingerprint = fingerprint_of(parts.iter().map(String::as_str));
        Ok(ListStream {
            kind,
            min_size,
            q,
            items,
            by_id,
            index,
            fingerprint,
        })
    }

    /// Replaces the content-derived fingerprint (e.g. with one recorded in a manifest).
    pub fn with_fingerprint(mut self, fingerprint: String) -> Self {
        self.fingerprint = fingerprint;
        self
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl ConstraintStream for ListStream {
    fn kind(&self) -> StreamKind {
        self.kind
    }
    fn min_size(&self) -> usize {
        self.min_size
    }
    fn q(&self) -> Rational {
        self.q.clone()
    }
    fn item(&self, j: usize) -> Option<Item> {
        self.by_id.get(&j).map(|&pos| self.items[pos].clone())
    }
    fn locality(&self, m: usize, n: usize) -> Vec<usize> {
        self.index.get(&(m, n)).cloned().unwrap_or_default()
    }
    fn candidate_sizes(&self, window: usize) -> Vec<usize> {
        let mut sizes: Vec<usize> = self
            .items
            .iter()
            .map(Item::len)
            .filter(|&m| m <= window)
            .collect();
        sizes.sort_unstable();
        sizes.dedup();
        sizes
    }
    fn for_each_within(&self, window: usize, visit: &mut dyn FnMut(Item)) {
        for item in &self.items {
            if item.dom().last().is_some_and(|&max| max < window) {
                visit(item.clone());
            }
        }
    }
    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }
}

/// Set stream re-presented as partial words: item `2j` is the all-0 word on
/// `F_j`, item `2j+1` the all-1 word, at rate `q' = (q+1)/2`.
#[derive(Debug, Clone)]
pub struct PartialsFromSets<S> {
    inner: S,
    q: Rational,
}

impl<S> PartialsFromSets<S> {
    pub fn inner(&self) -> &S {
        &self.inner
    }
}

fn words_of(item: Item) -> [Item; 2] {
    let Item::Set { id, elems } = item else {
        unreachable!("set streams only produce sets")
    };
    [
        Item::Word(PartialWord::constant(2 * id, elems.clone(), false)),
        Item::Word(PartialWord::constant(2 * id + 1, elems, true)),
    ]
}

/// Least `M` for which doubling the items through a point is absorbed by `q' = (q+1)/2`,
/// i.e. `2 * 2^(q m) <= 2^(q' m)` for all `m >= M`.
pub fn least_partials_m(q: &Rational) -> usize {
    // 1 + q m <= q' m  <=>  m >= 1 / (q' - q) = 2 / (1 - q)
    let bound = ratio::from_int(2) / (Rational::one() - q);
    usize::try_from(ratio::ceil(&bound)).expect("bound fits in usize")
}

pub fn sets_to_partials<S: ConstraintStream>(
    stream: S,
) -> Result<PartialsFromSets<S>, StreamError> {
    if stream.kind() != StreamKind::Sets {
        return Err(StreamError::InvalidInput(
            "sets_to_partials needs a set stream".into(),
        ));
    }
    let q = stream.q();
    check_stream_params(stream.min_size(), &q)?;
    let q_prime = (&q + Rational::one()) / ratio::from_int(2);
    let m = ratio::from_int(stream.min_size());
    if Rational::one() + &q * &m > &q_prime * &m {
        let least = least_partials_m(&q);
        return Err(StreamError::InvalidParameter {
            message: format!(
                "M = {} too small to absorb index doubling at q = {}; need M >= {least}",
                stream.min_size(),
                ratio::format(&q)
            ),
            least_admissible: Some(least),
        });
    }
    Ok(PartialsFromSets {
        inner: stream,
        q: q_prime,
    })
}

impl<S: ConstraintStream> ConstraintStream for PartialsFromSets<S> {
    fn kind(&self) -> StreamKind {
        StreamKind::Partials
    }
    fn min_size(&self) -> usize {
        self.inner.min_size()
    }
    fn q(&self) -> Rational {
        self.q.clone()
    }
    fn item(&self, j: usize) -> Option<Item> {
        let [zero, one] = words_of(self.inner.item(j / 2)?);
        Some(if j.is_multiple_of(2) { zero } else { one })
    }
    fn locality(&self, m: usize, n: usize) -> Vec<usize> {
        self.inner
            .locality(m, n)
            .into_iter()
            .flat_map(|j| [2 * j, 2 * j + 1])
            .collect()
    }
    fn candidate_sizes(&self, window: usize) -> Vec<usize> {
        self.inner.candidate_sizes(window)
    }
    fn for_each_within(&self, window: usize, visit: &mut dyn FnMut(Item)) {
        self.inner.for_each_within(window, &mut |item| {
            for word in words_of(item) {
                visit(word);
            }
        });
    }
    fn fingerprint(&self) -> String {
        fingerprint_of(["partials-from-sets", &self.inner.fingerprint()])
    }
}

/// Per-(m, n) locality counts measured on a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityReport {
    pub window: usize,
    pub min_size: usize,
    pub q: Rational,
    /// Nonzero counts keyed by `(m, n)`.
    pub counts: BTreeMap<(usize, usize), u64>,
    /// Entries with `count > 2^(q m)`, ordered by `(n, m)`.
    pub violations: Vec<(usize, usize, u64)>,
    /// Entries within the bound but above half of it.
    pub near_bound: Vec<(usize, usize, u64)>,
    /// Items inside the window cross-checked against the oracle.
    pub items_checked: usize,
}

impl SparsityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_count_by_size(&self) -> BTreeMap<usize, u64> {
        let mut out = BTreeMap::new();
        for (&(m, _), &c) in &self.counts {
            let e = out.entry(m).or_insert(0);
            *e = (*e).max(c);
        }
        out
    }

    /// `m,n,count` rows for every nonzero count.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,count\n");
        for (&(m, n), &c) in &self.counts {
            out.push_str(&format!("{m},{n},{c}\n"));
        }
        out
    }
}

/// Measures `|locality(m, n)|` for every `m` in `[M, window]` and `n < window`,
/// checks it against `2^(q m)` exactly, and cross-checks the oracle against
/// the items enumerated inside the window.
pub fn validate_sparsity(
    stream: &dyn ConstraintStream,
    window: usize,
) -> Result<SparsityReport, StreamError> {
    if window == 0 {
        return Err(StreamError::InvalidInput(
            "window must be at least 1".into(),
        ));
    }
    let q = stream.q();
    let min_size = stream.min_size();
    let mut counts = BTreeMap::new();
    let mut violations = Vec::new();
    let mut near_bound = Vec::new();
    let mut hits: HashMap<usize, usize> = HashMap::new();
    let integrity =
        |item: usize, size: usize, point: usize, message: &str| StreamError::Integrity {
            item,
            size,
            point,
            message: message.to_string(),
        };
    let sizes: Vec<usize> = stream
        .candidate_sizes(window)
        .into_iter()
        .filter(|&m| m >= min_size && m <= window)
        .collect();
    // items met so far whose largest element is not yet behind the scan
    let mut live: HashMap<usize, Item> = HashMap::new();
    for n in 0..window {
        if n % 256 == 0 {
            live.retain(|_, item| item.dom()[item.len() - 1] >= n);
        }
        for (m, ids) in stream.locality_by_size(n, &sizes) {
            for &j in &ids {
                if let std::collections::hash_map::Entry::Vacant(e) = live.entry(j) {
                    let item = stream
                        .item(j)
                        .ok_or_else(|| integrity(j, m, n, "locality names an unproduced item"))?;
                    e.insert(item);
                }
                let item = &live[&j];
                if item.len() != m || !item.contains(n) {
                    return Err(integrity(
                        j,
                        m,
                        n,
                        "locality names an item of another size or missing the point",
                    ));
                }
                *hits.entry(j).or_insert(0) += 1;
            }
            let count = ids.len() as u64;
            counts.insert((m, n), count);
            if !ratio::count_within_pow2(count, &q, m) {
                violations.push((m, n, count));
            } else if !ratio::count_within_pow2(2 * count, &q, m) {
                near_bound.push((m, n, count));
            }
        }
    }
    let mut items_checked = 0;
    let mut failure = None;
    stream.for_each_within(window, &mut |item| {
        if failure.is_some() {
            return;
        }
        items_checked += 1;
        if item.len() < min_size {
            failure = Some(integrity(
                item.id(),
                item.len(),
                item.dom()[0],
                "size below M",
            ));
            return;
        }
        if hits.get(&item.id()).copied().unwrap_or(0) != item.len() {
            let missing = item
                .dom()
                .iter()
                .copied()
                .find(|&n| !stream.locality(item.len(), n).contains(&item.id()))
                .unwrap_or(item.dom()[0]);
            failure = Some(integrity(
                item.id(),
                item.len(),
                missing,
                "enumerated item missing from locality",
            ));
        }
    });
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(SparsityReport {
        window,
        min_size,
        q,
        counts,
        violations,
        near_bound,
        items_checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::from_ratio;

    fn sets(items: &[&[usize]], m: usize) -> ListStream {
        let items = items
            .iter()
            .enumerate()
            .map(|(j, s)| Item::set(j, s.to_vec()).unwrap())
            .collect();
        ListStream::new(StreamKind::Sets, m, from_ratio(1, 2), items).unwrap()
    }

    #[test]
    fn partials_unfold_sets() {
        let s = sets(&[&[0, 1, 2]], 3);
        let err = sets_to_partials(&s).unwrap_err();
        assert!(matches!(
            err,
            StreamError::InvalidParameter {
                least_admissible: Some(4),
                ..
            }
        ));

        let s = sets(&[&[0, 1, 2, 3], &[1, 5, 6, 9]], 4);
        let p = sets_to_partials(&s).unwrap();
        assert_eq!(p.q(), from_ratio(3, 4));
        assert_eq!(
            p.item(0),
            Some(Item::Word(PartialWord::constant(
                0,
                vec![0, 1, 2, 3],
                false
            )))
        );
        assert_eq!(
            p.item(1),
            Some(Item::Word(PartialWord::constant(1, vec![0, 1, 2, 3], true)))
        );
        assert_eq!(p.item(4), None);
        assert_eq!(p.locality(4, 1), vec![0, 1, 2, 3]);
        assert_eq!(p.locality(4, 0), vec![0, 1]);
        assert_eq!(p.locality(4, 9), vec![2, 3]);
    }

    #[test]
    fn least_partials_m_values() {
        assert_eq!(least_partials_m(&from_ratio(1, 2)), 4);
        assert_eq!(least_partials_m(&from_ratio(3, 4)), 8);
        assert_eq!(least_partials_m(&from_ratio(1, 3)), 3);
    }

    #[test]
    fn locality_of_single_set_after_doubling() {
        let s = sets(&[&[0, 1, 2, 3]], 4);
        let p = sets_to_partials(&s).unwrap();
        assert_eq!(p.locality(4, 1), vec![0, 1]);
    }

    #[test]
    fn empty_stream_validates() {
        let s = ListStream::new(StreamKind::Sets, 4, from_ratio(1, 2), vec![]).unwrap();
        let report = validate_sparsity(&s, 64).unwrap();
        assert!(report.passed());
        assert!(report.counts.is_empty());
        assert_eq!(report.items_checked, 0);
    }

    #[test]
    fn overfull_point_is_reported() {
        // 2^(4/2) + 1 = 5 sets of size 4 through point 0
        let items: Vec<Vec<usize>> = (0..5)
            .map(|j| vec![0, 1 + 3 * j, 2 + 3 * j, 3 + 3 * j])
            .collect();
        let refs: Vec<&[usize]> = items.iter().map(Vec::as_slice).collect();
        let s = sets(&refs, 4);
        let report = validate_sparsity(&s, 32).unwrap();
        assert!(!report.passed());
        assert_eq!(report.violations, vec![(4, 0, 5)]);

        let s = sets(&refs[..4], 4);
        let report = validate_sparsity(&s, 32).unwrap();
        assert!(report.passed());
        assert!(report.near_bound.contains(&(4, 0, 4)));
    }

    struct Broken(ListStream);

    impl ConstraintStream for Broken {
        fn kind(&self) -> StreamKind {
            self.0.kind()
        }
        fn min_size(&self) -> usize {
            self.0.min_size()
        }
        fn q(&self) -> Rational {
            self.0.q()
        }
        fn item(&self, j: usize) -> Option<Item> {
            self.0.item(j)
        }
        fn locality(&self, m: usize, n: usize) -> Vec<usize> {
            // forgets point 2
            if n == 2 {
                Vec::new()
            } else {
                self.0.locality(m, n)
            }
        }
        fn for_each_within(&self, window: usize, visit: &mut dyn FnMut(Item)) {
            self.0.for_each_within(window, visit)
        }
        fn fingerprint(&self) -> String {
            "broken".into()
        }
    }

    #[test]
    fn inconsistent_locality_is_an_integrity_error() {
        let s = Broken(sets(&[&[0, 1, 2, 3]], 4));
        match validate_sparsity(&s, 8) {
            Err(StreamError::Integrity {
                item: 0,
                size: 4,
                point: 2,
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn default_enumeration_matches_list() {
        struct ViaOracle(ListStream);
        impl ConstraintStream for ViaOracle {
            fn kind(&self) -> StreamKind {
                self.0.kind()
            }
            fn min_size(&self) -> usize {
                self.0.min_size()
            }
            fn q(&self) -> Rational {
                self.0.q()
            }
            fn item(&self, j: usize) -> Option<Item> {
                self.0.item(j)
            }
            fn locality(&self, m: usize, n: usize) -> Vec<usize> {
                self.0.locality(m, n)
            }
            fn fingerprint(&self) -> String {
                self.0.fingerprint()
            }
        }
        let s = sets(&[&[3, 4, 9, 10], &[0, 1, 2, 3, 4], &[5, 6, 7, 30]], 4);
        let mut via_oracle = Vec::new();
        ViaOracle(s.clone()).for_each_within(16, &mut |i| via_oracle.push(i.id()));
        via_oracle.sort();
        assert_eq!(via_oracle, vec![0, 1]);
    }
}
