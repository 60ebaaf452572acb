//! Finite asymmetric local lemma: exact event probabilities, dependency
//! neighborhoods, condition certification and seeded resampling.

pub mod format;
pub mod solver;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::ratio::{self, Rational};
pub use solver::{default_budget, CompiledInstance, InstanceBuilder, Row, Sampler, SolveFailure};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LllError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no convergence after {resamplings} resamplings (violated: {violated:?}, recent: {recent:?})")]
    NonConvergence {
        resamplings: u64,
        recent: Vec<usize>,
        violated: Vec<usize>,
    },
    #[error("unsatisfiable: {reason} (events {events:?})")]
    Unsatisfiable { events: Vec<usize>, reason: String },
}

/// An independent random variable over `0..range_size` with exact weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSpec {
    index: usize,
    weights: Vec<Rational>,
}

impl VarSpec {
    pub fn new(index: usize, weights: Vec<Rational>) -> Result<Self, LllError> {
        if weights.is_empty() {
            return Err(LllError::InvalidInstance(format!(
                "variable {index} has empty range"
            )));
        }
        if weights.iter().any(|w| *w < Rational::zero()) {
            return Err(LllError::InvalidInstance(format!(
                "variable {index} has a negative weight"
            )));
        }
        let total: Rational = weights.iter().sum();
        if !total.is_one() {
            return Err(LllError::InvalidInstance(format!(
                "weights of variable {index} sum to {}",
                ratio::format(&total)
            )));
        }
        Ok(VarSpec { index, weights })
    }

    pub fn uniform(index: usize, range_size: usize) -> Self {
        let w = ratio::from_ratio(1, range_size as i64);
        VarSpec {
            index,
            weights: vec![w; range_size],
        }
    }

    pub fn fair_bit(index: usize) -> Self {
        Self::uniform(index, 2)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn range_size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    fn sampler(&self) -> Sampler {
        let uniform = self.weights.iter().all(|w| *w == self.weights[0]);
        if uniform {
            return Sampler::Uniform(self.range_size() as u32);
        }
        let scale = Rational::from_integer(num_bigint::BigInt::one() << 64);
        let mut cumulative = Rational::zero();
        let thresholds = self.weights[..self.weights.len() - 1]
            .iter()
            .map(|w| {
                cumulative += w;
                let t = (&cumulative * &scale).floor().to_integer();
                u128::try_from(t).expect("threshold within 2^64")
            })
            .collect();
        Sampler::Weighted(thresholds)
    }
}

/// A bad event: the variables in `vbl` jointly take one of the `forbidden` rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    id: usize,
    vbl: Vec<usize>,
    forbidden: Vec<Vec<u32>>,
}

impl Event {
    pub fn new(id: usize, vbl: Vec<usize>, forbidden: Vec<Vec<u32>>) -> Result<Self, LllError> {
        if vbl.is_empty() {
            return Err(LllError::InvalidInstance(format!(
                "event {id} depends on no variables"
            )));
        }
        if vbl.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LllError::InvalidInstance(format!(
                "event {id}: vbl must be strictly increasing"
            )));
        }
        if let Some(row) = forbidden.iter().find(|row| row.len() != vbl.len()) {
            return Err(LllError::InvalidInstance(format!(
                "event {id}: forbidden row {row:?} does not cover vbl {vbl:?}"
            )));
        }
        let distinct: BTreeSet<&Vec<u32>> = forbidden.iter().collect();
        if distinct.len() != forbidden.len() {
            return Err(LllError::InvalidInstance(format!(
                "event {id}: duplicate forbidden rows"
            )));
        }
        Ok(Event { id, vbl, forbidden })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn vbl(&self) -> &[usize] {
        &self.vbl
    }

    pub fn forbidden(&self) -> &[Vec<u32>] {
        &self.forbidden
    }

    /// True iff the assignment restricted to `vbl` is one of the forbidden rows.
    pub fn is_violated_by(&self, assignment: &Assignment) -> Result<bool, LllError> {
        let restricted: Vec<u32> = self
            .vbl
            .iter()
            .map(|v| {
                assignment.get(*v).ok_or_else(|| {
                    LllError::InvalidInput(format!(
                        "assignment misses variable {v} used by event {}",
                        self.id
                    ))
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(self.forbidden.contains(&restricted))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Assignment {
    values: BTreeMap<usize, u32>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: usize) -> Option<u32> {
        self.values.get(&var).copied()
    }

    pub fn set(&mut self, var: usize, value: u32) {
        self.values.insert(var, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.values.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FromIterator<(usize, u32)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (usize, u32)>>(iter: T) -> Self {
        Assignment {
            values: iter.into_iter().collect(),
        }
    }
}

/// Accepted condition: parameters plus the per-event slack `bound - Pr[A_j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LllCertificate {
    pub r: Vec<Rational>,
    pub q: Rational,
    pub margins: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refusal {
    /// Id of the first event whose probability exceeds its bound.
    pub event: usize,
    pub probability: Rational,
    pub bound: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accepted(LllCertificate),
    Refused(Refusal),
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted(_))
    }
}

fn var_table(vars: &[VarSpec]) -> Result<HashMap<usize, &VarSpec>, LllError> {
    let mut table = HashMap::with_capacity(vars.len());
    for v in vars {
        if table.insert(v.index, v).is_some() {
            return Err(LllError::InvalidInstance(format!(
                "variable {} declared twice",
                v.index
            )));
        }
    }
    Ok(table)
}

fn probability_with(event: &Event, table: &HashMap<usize, &VarSpec>) -> Result<Rational, LllError> {
    let specs: Vec<&VarSpec> = event
        .vbl
        .iter()
        .map(|v| {
            table.get(v).copied().ok_or_else(|| {
                LllError::InvalidInstance(format!(
                    "event {} references undeclared variable {v}",
                    event.id
                ))
            })
        })
        .collect::<Result<_, _>>()?;
    let mut total = Rational::zero();
    for row in &event.forbidden {
        let mut p = Rational::one();
        for (spec, &value) in specs.iter().zip(row) {
            let w = spec.weights.get(value as usize).ok_or_else(|| {
                LllError::InvalidInstance(format!(
                    "event {}: value {value} outside the range of variable {}",
                    event.id, spec.index
                ))
            })?;
            p *= w;
        }
        total += p;
    }
    Ok(total)
}

/// Exact product measure of the event's forbidden set.
pub fn event_probability(event: &Event, vars: &[VarSpec]) -> Result<Rational, LllError> {
    probability_with(event, &var_table(vars)?)
}

/// `t` neighbors `j` iff their supports intersect; every event with a
/// nonempty support neighbors itself.
pub fn dependency_neighbors(events: &[Event]) -> BTreeMap<usize, BTreeSet<usize>> {
    let mut by_var: HashMap<usize, Vec<usize>> = HashMap::new();
    for e in events {
        for &v in &e.vbl {
            by_var.entry(v).or_default().push(e.id);
        }
    }
    events
        .iter()
        .map(|e| {
            let neighbors = e
                .vbl
                .iter()
                .flat_map(|v| by_var[v].iter().copied())
                .collect();
            (e.id, neighbors)
        })
        .collect()
}

/// Checks `Pr[A_j] <= q * r_j * prod_{t in N(A_j), t != j} (1 - r_t)` for every event.
pub fn check_condition(
    events: &[Event],
    vars: &[VarSpec],
    r: &[Rational],
    q: &Rational,
) -> Result<Verdict, LllError> {
    if r.len() != events.len() {
        return Err(LllError::InvalidParameter(format!(
            "{} r values for {} events",
            r.len(),
            events.len()
        )));
    }
    if let Some(bad) = r.iter().find(|x| !ratio::in_open_unit(x)) {
        return Err(LllError::InvalidParameter(format!(
            "r value {} outside (0,1)",
            ratio::format(bad)
        )));
    }
    if !ratio::in_half_open_unit(q) {
        return Err(LllError::InvalidParameter(format!(
            "q = {} outside (0,1]",
            ratio::format(q)
        )));
    }
    let mut position = HashMap::with_capacity(events.len());
    for (i, e) in events.iter().enumerate() {
        if position.insert(e.id, i).is_some() {
            return Err(LllError::InvalidInstance(format!(
                "event id {} used twice",
                e.id
            )));
        }
    }
    let table = var_table(vars)?;
    let neighbors = dependency_neighbors(events);
    let mut margins = Vec::with_capacity(events.len());
    for (j, event) in events.iter().enumerate() {
        let probability = probability_with(event, &table)?;
        let mut bound = q * &r[j];
        for t in &neighbors[&event.id] {
            if *t != event.id {
                bound *= Rational::one() - &r[position[t]];
            }
        }
        if probability > bound {
            return Ok(Verdict::Refused(Refusal {
                event: event.id,
                probability,
                bound,
            }));
        }
        margins.push(bound - probability);
    }
    Ok(Verdict::Accepted(LllCertificate {
        r: r.to_vec(),
        q: q.clone(),
        margins,
    }))
}

/// Ids of events violated by the assignment (empty iff it avoids all of them).
pub fn verify_assignment(
    assignment: &Assignment,
    events: &[Event],
) -> Result<Vec<usize>, LllError> {
    let mut violated = Vec::new();
    for e in events {
        if e.is_violated_by(assignment)? {
            violated.push(e.id);
        }
    }
    Ok(violated)
}

/// Compiles the instance over dense variable indices (sorted by declared index).
fn compile(events: &[Event], vars: &[VarSpec]) -> Result<(CompiledInstance, Vec<usize>), LllError> {
    let table = var_table(vars)?;
    let mut order: Vec<&VarSpec> = vars.iter().collect();
    order.sort_by_key(|v| v.index);
    let dense: HashMap<usize, u32> = order
        .iter()
        .enumerate()
        .map(|(i, v)| (v.index, i as u32))
        .collect();
    let mut builder = InstanceBuilder::new();
    for v in &order {
        builder.add_var(v.sampler());
    }
    for e in events {
        // range and reference checks
        probability_with(e, &table)?;
        let vars: Vec<u32> = e.vbl.iter().map(|v| dense[v]).collect();
        builder.add_event(&vars, e.forbidden.iter().map(|row| Row::Values(row)));
    }
    Ok((builder.build(), order.iter().map(|v| v.index).collect()))
}

fn failure_to_error(failure: SolveFailure, events: &[Event]) -> LllError {
    let ids = |xs: Vec<u32>| xs.into_iter().map(|e| events[e as usize].id).collect();
    match failure {
        SolveFailure::NonConvergence {
            resamplings,
            recent,
            violated,
        } => LllError::NonConvergence {
            resamplings,
            recent: ids(recent),
            violated: ids(violated),
        },
        SolveFailure::Unsatisfiable {
            events: bad,
            reason,
        } => LllError::Unsatisfiable {
            events: ids(bad),
            reason,
        },
    }
}

/// Moser-Tardos resampling with least-id selection and counter-keyed draws.
///
/// Events are resampled in the order given; callers wanting id order should
/// pass events sorted by id.
pub fn solve_moser_tardos(
    events: &[Event],
    vars: &[VarSpec],
    seed: u64,
    budget: u64,
) -> Result<Assignment, LllError> {
    if budget == 0 {
        return Err(LllError::InvalidParameter(
            "budget must be at least 1".into(),
        ));
    }
    let mut sorted: Vec<Event> = events.to_vec();
    sorted.sort_by_key(|e| e.id);
    let (instance, indices) = compile(&sorted, vars)?;
    let init = vec![None; instance.num_vars()];
    let solution = instance
        .solve(seed, budget, &init)
        .map_err(|f| failure_to_error(f, &sorted))?;
    Ok(indices.into_iter().zip(solution.values).collect())
}
