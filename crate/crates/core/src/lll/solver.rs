//! Compiled instances and the Moser-Tardos resampling loop.
//!
//! Events are stored in flat CSR arrays so that streams with millions of
//! constraints fit in memory. Violation status is tracked incrementally: each
//! forbidden row keeps a count of positions currently matching it, and an
//! event is violated while some row matches on every position.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use crate::seed;

/// How a variable draws fresh values from its counter-keyed stream.
#[derive(Debug, Clone)]
pub enum Sampler {
    /// Uniform over `0..range`.
    Uniform(u32),
    /// Cumulative thresholds scaled by `2^64`; value `v` is the first with
    /// `draw < thresholds[v]`, the last value takes the remainder.
    Weighted(Vec<u128>),
}

impl Sampler {
    fn range(&self) -> u32 {
        match self {
            Sampler::Uniform(r) => *r,
            Sampler::Weighted(t) => t.len() as u32 + 1,
        }
    }

    #[inline]
    fn sample(&self, draw: u64) -> u32 {
        match self {
            Sampler::Uniform(2) => (draw >> 63) as u32,
            Sampler::Uniform(r) => ((u128::from(draw) * u128::from(*r)) >> 64) as u32,
            Sampler::Weighted(thresholds) => {
                let d = u128::from(draw);
                thresholds
                    .iter()
                    .position(|&t| d < t)
                    .unwrap_or(thresholds.len()) as u32
            }
        }
    }
}

/// A forbidden assignment of an event, in the order of the event's variables.
#[derive(Debug, Clone, Copy)]
pub enum Row<'a> {
    /// Every variable takes the same value.
    Constant(u32),
    Values(&'a [u32]),
}

#[derive(Debug, Clone, Copy)]
enum RowSpec {
    Constant(u32),
    Explicit(usize),
}

#[derive(Debug, Default, Clone)]
pub struct InstanceBuilder {
    samplers: Vec<Sampler>,
    ev_off: Vec<usize>,
    ev_vars: Vec<u32>,
    row_off: Vec<usize>,
    rows: Vec<RowSpec>,
    row_vals: Vec<u32>,
}

impl InstanceBuilder {
    pub fn new() -> Self {
        InstanceBuilder {
            ev_off: vec![0],
            row_off: vec![0],
            ..Default::default()
        }
    }

    pub fn with_fair_bits(count: usize) -> Self {
        let mut builder = Self::new();
        builder.samplers = vec![Sampler::Uniform(2); count];
        builder
    }

    pub fn add_var(&mut self, sampler: Sampler) -> u32 {
        self.samplers.push(sampler);
        self.samplers.len() as u32 - 1
    }

    pub fn num_vars(&self) -> usize {
        self.samplers.len()
    }

    pub fn num_events(&self) -> usize {
        self.ev_off.len() - 1
    }

    /// Adds an event over strictly increasing `vars` with the given forbidden rows.
    pub fn add_event<'a>(&mut self, vars: &[u32], rows: impl IntoIterator<Item = Row<'a>>) -> u32 {
        debug_assert!(
            vars.windows(2).all(|w| w[0] < w[1]),
            "event variables must be sorted"
        );
        debug_assert!(vars.iter().all(|&v| (v as usize) < self.samplers.len()));
        self.ev_vars.extend_from_slice(vars);
        self.ev_off.push(self.ev_vars.len());
        for row in rows {
            match row {
                Row::Constant(c) => self.rows.push(RowSpec::Constant(c)),
                Row::Values(values) => {
                    debug_assert_eq!(values.len(), vars.len());
                    self.rows.push(RowSpec::Explicit(self.row_vals.len()));
                    self.row_vals.extend_from_slice(values);
                }
            }
        }
        self.row_off.push(self.rows.len());
        self.num_events() as u32 - 1
    }

    pub fn build(self) -> CompiledInstance {
        let n = self.samplers.len();
        let mut degree = vec![0usize; n + 1];
        for &v in &self.ev_vars {
            degree[v as usize + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let occ_off = degree;
        let mut fill = occ_off.clone();
        let mut occ = vec![0u32; self.ev_vars.len()];
        for e in 0..self.ev_off.len() - 1 {
            for &v in &self.ev_vars[self.ev_off[e]..self.ev_off[e + 1]] {
                occ[fill[v as usize]] = e as u32;
                fill[v as usize] += 1;
            }
        }
        CompiledInstance {
            samplers: self.samplers,
            ev_off: self.ev_off,
            ev_vars: self.ev_vars,
            row_off: self.row_off,
            rows: self.rows,
            row_vals: self.row_vals,
            occ_off,
            occ,
        }
    }
}

/// Failure modes of a resampling run, in dense event indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveFailure {
    NonConvergence {
        resamplings: u64,
        recent: Vec<u32>,
        violated: Vec<u32>,
    },
    Unsatisfiable {
        events: Vec<u32>,
        reason: String,
    },
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub values: Vec<u32>,
    pub resamplings: u64,
}

#[derive(Debug, Clone)]
pub struct CompiledInstance {
    samplers: Vec<Sampler>,
    ev_off: Vec<usize>,
    ev_vars: Vec<u32>,
    row_off: Vec<usize>,
    rows: Vec<RowSpec>,
    row_vals: Vec<u32>,
    occ_off: Vec<usize>,
    occ: Vec<u32>,
}

const TRACE_LEN: usize = 32;

impl CompiledInstance {
    pub fn num_vars(&self) -> usize {
        self.samplers.len()
    }

    pub fn num_events(&self) -> usize {
        self.ev_off.len() - 1
    }

    fn vars_of(&self, e: usize) -> &[u32] {
        &self.ev_vars[self.ev_off[e]..self.ev_off[e + 1]]
    }

    #[inline]
    fn row_value(&self, e: usize, row: usize, var: u32) -> u32 {
        match self.rows[row] {
            RowSpec::Constant(c) => c,
            RowSpec::Explicit(off) => {
                let pos = self
                    .vars_of(e)
                    .binary_search(&var)
                    .expect("variable belongs to event");
                self.row_vals[off + pos]
            }
        }
    }

    fn row_values(&self, e: usize, row: usize) -> Vec<u32> {
        let k = self.vars_of(e).len();
        match self.rows[row] {
            RowSpec::Constant(c) => vec![c; k],
            RowSpec::Explicit(off) => self.row_vals[off..off + k].to_vec(),
        }
    }

    /// Indices of events violated by `values`.
    pub fn violated(&self, values: &[u32]) -> Vec<u32> {
        (0..self.num_events())
            .filter(|&e| {
                let vars = self.vars_of(e);
                (self.row_off[e]..self.row_off[e + 1]).any(|r| {
                    vars.iter()
                        .all(|&v| values[v as usize] == self.row_value(e, r, v))
                })
            })
            .map(|e| e as u32)
            .collect()
    }

    /// Structural unsatisfiability that resampling could never escape: an
    /// event forbidding its whole cube, or single-variable events that
    /// jointly forbid every value of one variable.
    pub fn trivially_unsatisfiable(&self) -> Option<SolveFailure> {
        let mut unit: HashMap<u32, (Vec<u32>, HashSet<u32>)> = HashMap::new();
        for e in 0..self.num_events() {
            let vars = self.vars_of(e);
            let rows = self.row_off[e + 1] - self.row_off[e];
            if vars.is_empty() {
                if rows > 0 {
                    return Some(SolveFailure::Unsatisfiable {
                        events: vec![e as u32],
                        reason: "event over no variables is always violated".into(),
                    });
                }
                continue;
            }
            let mut cube: u128 = 1;
            for &v in vars {
                cube = cube.saturating_mul(u128::from(self.samplers[v as usize].range()));
            }
            if (rows as u128) >= cube {
                let distinct: HashSet<Vec<u32>> = (self.row_off[e]..self.row_off[e + 1])
                    .map(|r| self.row_values(e, r))
                    .collect();
                if distinct.len() as u128 >= cube {
                    return Some(SolveFailure::Unsatisfiable {
                        events: vec![e as u32],
                        reason: "forbidden set covers the whole cube".into(),
                    });
                }
            }
            if vars.len() == 1 {
                let entry = unit.entry(vars[0]).or_default();
                entry.0.push(e as u32);
                for r in self.row_off[e]..self.row_off[e + 1] {
                    entry.1.insert(self.row_value(e, r, vars[0]));
                }
            }
        }
        let mut pinned: Vec<_> = unit.into_iter().collect();
        pinned.sort_by_key(|(v, _)| *v);
        for (v, (events, values)) in pinned {
            let range = self.samplers[v as usize].range();
            if (0..range).all(|x| values.contains(&x)) {
                return Some(SolveFailure::Unsatisfiable {
                    events,
                    reason: format!("single-variable events forbid every value of variable {v}"),
                });
            }
        }
        None
    }

    fn initial_values(&self, seed: u64, init: &[Option<u32>]) -> Vec<u32> {
        assert_eq!(init.len(), self.num_vars());
        init.iter()
            .enumerate()
            .map(|(v, fixed)| {
                fixed.unwrap_or_else(|| self.samplers[v].sample(seed::draw(seed, v as u64, 0)))
            })
            .collect()
    }

    /// Runs resampling from `init` (`None` entries are sampled), always
    /// resampling the violated event of least index.
    pub fn solve(
        &self,
        seed: u64,
        budget: u64,
        init: &[Option<u32>],
    ) -> Result<Solution, SolveFailure> {
        self.solve_until_stall(seed, budget, u64::MAX, init)
    }

    /// As [`solve`](Self::solve), but also gives up once `stall` resamplings
    /// pass without the number of violated events reaching a new minimum.
    pub fn solve_until_stall(
        &self,
        seed: u64,
        budget: u64,
        stall: u64,
        init: &[Option<u32>],
    ) -> Result<Solution, SolveFailure> {
        if let Some(failure) = self.trivially_unsatisfiable() {
            return Err(failure);
        }
        let mut violated = BTreeSet::new();
        let mut state = Tracker::new(self, self.initial_values(seed, init), |e, on| {
            if on {
                violated.insert(e);
            }
        });
        let mut counters = vec![1u64; self.num_vars()];
        let mut resamplings = 0u64;
        let mut best = (violated.len(), 0u64);
        let mut recent = VecDeque::with_capacity(TRACE_LEN);
        while let Some(&e) = violated.first() {
            if resamplings >= budget || resamplings - best.1 >= stall {
                return Err(SolveFailure::NonConvergence {
                    resamplings,
                    recent: recent.into_iter().collect(),
                    violated: violated.iter().take(TRACE_LEN).copied().collect(),
                });
            }
            resamplings += 1;
            if recent.len() == TRACE_LEN {
                recent.pop_front();
            }
            recent.push_back(e);
            let e = e as usize;
            for i in self.ev_off[e]..self.ev_off[e + 1] {
                let v = self.ev_vars[i] as usize;
                let fresh = self.samplers[v].sample(seed::draw(seed, v as u64, counters[v]));
                counters[v] += 1;
                state.assign(self, v, fresh, |o, on| {
                    if on {
                        violated.insert(o);
                    } else {
                        violated.remove(&o);
                    }
                });
            }
            if violated.len() < best.0 {
                best = (violated.len(), resamplings);
            }
        }
        Ok(Solution {
            values: state.values,
            resamplings,
        })
    }

    /// Focused local search from `init`: pick a violated event uniformly and
    /// change one of its variables, usually the one that newly violates the
    /// fewest other events, otherwise a random one. `Solution::resamplings`
    /// counts the steps taken.
    pub fn walk(
        &self,
        seed: u64,
        budget: u64,
        init: &[Option<u32>],
    ) -> Result<Solution, SolveFailure> {
        if let Some(failure) = self.trivially_unsatisfiable() {
            return Err(failure);
        }
        let mut violated = IndexedSet::new(self.num_events());
        let mut state = Tracker::new(self, self.initial_values(seed, init), |e, on| {
            if on {
                violated.insert(e);
            }
        });
        // draws keyed past every variable index
        let rng_index = self.num_vars() as u64;
        let mut counter = 1u64;
        let mut next_draw = || {
            counter += 1;
            seed::draw(seed, rng_index, counter)
        };
        let mut steps = 0u64;
        let mut recent = VecDeque::with_capacity(TRACE_LEN);
        while !violated.is_empty() {
            if steps >= budget {
                let mut left = violated.items.clone();
                left.sort_unstable();
                left.truncate(TRACE_LEN);
                return Err(SolveFailure::NonConvergence {
                    resamplings: steps,
                    recent: recent.into_iter().collect(),
                    violated: left,
                });
            }
            steps += 1;
            let e = violated.items
                [((u128::from(next_draw()) * violated.items.len() as u128) >> 64) as usize];
            if recent.len() == TRACE_LEN {
                recent.pop_front();
            }
            recent.push_back(e);
            let vars = self.vars_of(e as usize);
            let (v, value) = if next_draw() < WALK_NOISE {
                let v =
                    vars[((u128::from(next_draw()) * vars.len() as u128) >> 64) as usize] as usize;
                let range = self.samplers[v].range();
                let shift = 1 + ((u128::from(next_draw()) * u128::from(range - 1)) >> 64) as u32;
                (v, (state.values[v] + shift) % range)
            } else {
                let mut best = (usize::MAX, 0, 0);
                for &v in vars {
                    let v = v as usize;
                    for value in (0..self.samplers[v].range()).filter(|&x| x != state.values[v]) {
                        let cost = state.breaks(self, v, value);
                        if cost < best.0 {
                            best = (cost, v, value);
                        }
                    }
                }
                (best.1, best.2)
            };
            state.assign(self, v, value, |o, on| {
                if on {
                    violated.insert(o);
                } else {
                    violated.remove(o);
                }
            });
        }
        Ok(Solution {
            values: state.values,
            resamplings: steps,
        })
    }
}

/// Probability of a random step in [`CompiledInstance::walk`], scaled by `2^64`: 3/10.
const WALK_NOISE: u64 = (u64::MAX / 10) * 3;

/// Incremental violation status: each forbidden row keeps how many of its
/// positions currently match.
struct Tracker {
    values: Vec<u32>,
    matches: Vec<u32>,
    bad_rows: Vec<u32>,
}

impl Tracker {
    fn new(inst: &CompiledInstance, values: Vec<u32>, mut report: impl FnMut(u32, bool)) -> Self {
        let mut matches = vec![0u32; inst.rows.len()];
        let mut bad_rows = vec![0u32; inst.num_events()];
        for e in 0..inst.num_events() {
            let vars = inst.vars_of(e);
            for r in inst.row_off[e]..inst.row_off[e + 1] {
                let count = vars
                    .iter()
                    .filter(|&&v| values[v as usize] == inst.row_value(e, r, v))
                    .count();
                matches[r] = count as u32;
                if count == vars.len() {
                    bad_rows[e] += 1;
                }
            }
            if bad_rows[e] > 0 {
                report(e as u32, true);
            }
        }
        Tracker {
            values,
            matches,
            bad_rows,
        }
    }

    /// Sets variable `v`, reporting events whose status flips.
    fn assign(
        &mut self,
        inst: &CompiledInstance,
        v: usize,
        fresh: u32,
        mut report: impl FnMut(u32, bool),
    ) {
        let old = self.values[v];
        if fresh == old {
            return;
        }
        self.values[v] = fresh;
        for &other in &inst.occ[inst.occ_off[v]..inst.occ_off[v + 1]] {
            let o = other as usize;
            let k = (inst.ev_off[o + 1] - inst.ev_off[o]) as u32;
            for r in inst.row_off[o]..inst.row_off[o + 1] {
                let target = inst.row_value(o, r, v as u32);
                if target == old {
                    if self.matches[r] == k {
                        self.bad_rows[o] -= 1;
                        if self.bad_rows[o] == 0 {
                            report(other, false);
                        }
                    }
                    self.matches[r] -= 1;
                } else if target == fresh {
                    self.matches[r] += 1;
                    if self.matches[r] == k {
                        self.bad_rows[o] += 1;
                        if self.bad_rows[o] == 1 {
                            report(other, true);
                        }
                    }
                }
            }
        }
    }

    /// Events currently satisfied that setting `v` to `value` would violate.
    fn breaks(&self, inst: &CompiledInstance, v: usize, value: u32) -> usize {
        inst.occ[inst.occ_off[v]..inst.occ_off[v + 1]]
            .iter()
            .filter(|&&other| {
                let o = other as usize;
                let k = (inst.ev_off[o + 1] - inst.ev_off[o]) as u32;
                self.bad_rows[o] == 0
                    && (inst.row_off[o]..inst.row_off[o + 1]).any(|r| {
                        self.matches[r] + 1 == k && inst.row_value(o, r, v as u32) == value
                    })
            })
            .count()
    }
}

/// Set of event indices with O(1) insert, remove and uniform choice.
struct IndexedSet {
    items: Vec<u32>,
    slot: Vec<u32>,
}

impl IndexedSet {
    fn new(capacity: usize) -> Self {
        IndexedSet {
            items: Vec::new(),
            slot: vec![u32::MAX; capacity],
        }
    }

    fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn insert(&mut self, e: u32) {
        if self.slot[e as usize] == u32::MAX {
            self.slot[e as usize] = self.items.len() as u32;
            self.items.push(e);
        }
    }

    fn remove(&mut self, e: u32) {
        let at = self.slot[e as usize];
        if at != u32::MAX {
            let last = self.items.pop().expect("nonempty");
            if last != e {
                self.items[at as usize] = last;
                self.slot[last as usize] = at;
            }
            self.slot[e as usize] = u32::MAX;
        }
    }
}

/// Resampling budget: `1000 * n * (1 + log2(n + 1))` for `n` events.
pub fn default_budget(num_events: usize) -> u64 {
    let n = num_events as f64;
    (1000.0 * n * (1.0 + (n + 1.0).log2())).ceil().max(1.0) as u64
}
