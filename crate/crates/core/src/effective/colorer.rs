//! Phased online 2-colorer.
//!
//! Phase `k` works on the window `[0, N_k)` with `N_k = N_0 * 2^k`. Positions
//! below the committed frontier `P` are final; the phase solves the items
//! inside the window, restricted to `[P, N_k)`, by resampling. Values found
//! for `[P, N_{k-1})` in the previous phase are reused as the starting point,
//! and afterwards `[0, N_{k-1})` becomes committed. A coloring therefore
//! depends only on the stream, the seed and `N_0`: coloring to a larger
//! horizon reproduces the shorter run's committed prefix bit for bit.

use num_traits::{One, ToPrimitive};

use super::{ConstraintStream, Item, StreamError};
use crate::lll::{default_budget, InstanceBuilder, Row, SolveFailure};
use crate::ratio::{self, Rational};
use crate::seed;

/// Where a coloring came from, enough to resume it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub fingerprint: String,
    pub seed: u64,
    /// `N_0`; zero for colorings loaded from files (not resumable).
    pub base_window: usize,
    /// Phases completed so far.
    pub phases: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    /// Committed bits followed by the provisional values of the last phase.
    bits: Vec<u8>,
    committed_len: usize,
    provenance: Provenance,
}

impl Coloring {
    /// A finished, non-resumable coloring (e.g. read from a file).
    pub fn from_committed(
        bits: Vec<u8>,
        seed: u64,
        fingerprint: String,
    ) -> Result<Self, StreamError> {
        if bits.iter().any(|&b| b > 1) {
            return Err(StreamError::InvalidInput(
                "coloring bits must be 0 or 1".into(),
            ));
        }
        let committed_len = bits.len();
        Ok(Coloring {
            bits,
            committed_len,
            provenance: Provenance {
                fingerprint,
                seed,
                base_window: 0,
                phases: 0,
            },
        })
    }

    pub fn committed(&self) -> &[u8] {
        &self.bits[..self.committed_len]
    }

    pub fn committed_len(&self) -> usize {
        self.committed_len
    }

    /// Committed bit at `n`.
    pub fn bit(&self, n: usize) -> Option<u8> {
        self.committed().get(n).copied()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn seed(&self) -> u64 {
        self.provenance.seed
    }

    pub fn fingerprint(&self) -> &str {
        &self.provenance.fingerprint
    }
}

#[derive(Debug, Clone, Default)]
pub struct ColorerConfig {
    /// `N_0`; defaults to `max(64, 4 M)`.
    pub base_window: Option<usize>,
    /// Multiplies the per-phase resampling budget.
    pub budget_scale: Option<u64>,
}

/// Colors `[0, horizon)` with the default configuration.
pub fn color_prefix(
    stream: &dyn ConstraintStream,
    horizon: usize,
    seed: u64,
) -> Result<Coloring, StreamError> {
    color_prefix_with(stream, horizon, seed, &ColorerConfig::default())
}

pub fn color_prefix_with(
    stream: &dyn ConstraintStream,
    horizon: usize,
    seed: u64,
    config: &ColorerConfig,
) -> Result<Coloring, StreamError> {
    let q = stream.q();
    if !ratio::in_open_unit(&q) {
        return Err(StreamError::InvalidParameter {
            message: format!("q = {} outside (0,1)", ratio::format(&q)),
            least_admissible: None,
        });
    }
    let base_window = config
        .base_window
        .unwrap_or_else(|| (4 * stream.min_size()).max(64));
    if base_window == 0 {
        return Err(StreamError::InvalidInput(
            "base window must be positive".into(),
        ));
    }
    let mut coloring = Coloring {
        bits: Vec::new(),
        committed_len: 0,
        provenance: Provenance {
            fingerprint: stream.fingerprint(),
            seed,
            base_window,
            phases: 0,
        },
    };
    run_phases(&mut coloring, stream, horizon, config)?;
    Ok(coloring)
}

/// Resumes `coloring` until at least `new_horizon` bits are committed.
///
/// The result equals a fresh run at the larger horizon.
pub fn extend_coloring(
    coloring: &Coloring,
    stream: &dyn ConstraintStream,
    new_horizon: usize,
) -> Result<Coloring, StreamError> {
    let found = stream.fingerprint();
    if found != coloring.provenance.fingerprint {
        return Err(StreamError::WrongStream {
            expected: coloring.provenance.fingerprint.clone(),
            found,
        });
    }
    if coloring.provenance.base_window == 0 {
        return Err(StreamError::InvalidInput(
            "coloring carries no resumable state".into(),
        ));
    }
    let mut out = coloring.clone();
    run_phases(&mut out, stream, new_horizon, &ColorerConfig::default())?;
    Ok(out)
}

/// Resampling stops making progress after this many steps per event (or
/// `MIN_STALL`) without a new low in violated events; the phase then
/// switches to a focused walk.
const STALL_PER_EVENT: u64 = 1;
const MIN_STALL: u64 = 10_000;

fn budget_multiplier(q: &Rational) -> u64 {
    let inv = Rational::one() / (Rational::one() - q);
    ratio::ceil(&inv).to_u64().unwrap_or(u64::MAX)
}

enum Restricted {
    /// Forbid the uncommitted positions being constantly each listed bit.
    Constants { zero: bool, one: bool },
    /// Forbid the uncommitted positions all disagreeing with the word,
    /// whose complement values start at this offset.
    Complement { vals_start: usize },
}

struct PhaseEvent {
    id: usize,
    start: usize,
    len: usize,
    kind: Restricted,
}

fn run_phases(
    coloring: &mut Coloring,
    stream: &dyn ConstraintStream,
    horizon: usize,
    config: &ColorerConfig,
) -> Result<(), StreamError> {
    let q = stream.q();
    let scale = budget_multiplier(&q).saturating_mul(config.budget_scale.unwrap_or(1).max(1));
    let base = coloring.provenance.base_window;
    while coloring.committed_len < horizon {
        let k = coloring.provenance.phases;
        let window = base
            .checked_shl(k as u32)
            .filter(|w| w >> k == base)
            .ok_or_else(|| {
                StreamError::InvalidInput(format!("horizon {horizon} needs a window beyond usize"))
            })?;
        let prev_window = if k == 0 { 0 } else { base << (k - 1) };
        let frontier = coloring.committed_len;
        coloring.bits.resize(window, 0);
        solve_phase(coloring, stream, k, window, prev_window, frontier, scale)?;
        coloring.committed_len = prev_window;
        coloring.provenance.phases = k + 1;
    }
    Ok(())
}

fn solve_phase(
    coloring: &mut Coloring,
    stream: &dyn ConstraintStream,
    phase: usize,
    window: usize,
    prev_window: usize,
    frontier: usize,
    scale: u64,
) -> Result<(), StreamError> {
    let bits = &coloring.bits;
    let mut positions: Vec<u32> = Vec::new();
    let mut word_vals: Vec<u32> = Vec::new();
    let mut events: Vec<PhaseEvent> = Vec::new();
    let mut touched = vec![false; window - prev_window.max(frontier)];
    let fresh_from = prev_window.max(frontier);
    let mut failure = None;

    stream.for_each_within(window, &mut |item| {
        if failure.is_some() {
            return;
        }
        let id = item.id();
        let start = positions.len();
        let kind = match &item {
            Item::Set { elems, .. } => {
                let (mut seen0, mut seen1) = (false, false);
                for &n in elems.iter().take_while(|&&n| n < frontier) {
                    if bits[n] == 0 {
                        seen0 = true;
                    } else {
                        seen1 = true;
                    }
                }
                if seen0 && seen1 {
                    return;
                }
                positions.extend(
                    elems
                        .iter()
                        .filter(|&&n| n >= frontier)
                        .map(|&n| (n - frontier) as u32),
                );
                Restricted::Constants {
                    zero: !seen1,
                    one: !seen0,
                }
            }
            Item::Word(w) => {
                let cut = w.dom.partition_point(|&n| n < frontier);
                if w.dom[..cut]
                    .iter()
                    .zip(&w.vals)
                    .any(|(&n, &v)| (bits[n] == 1) == v)
                {
                    return;
                }
                let vals_start = word_vals.len();
                for (&n, &v) in w.dom[cut..].iter().zip(&w.vals[cut..]) {
                    positions.push((n - frontier) as u32);
                    word_vals.push(u32::from(!v));
                }
                Restricted::Complement { vals_start }
            }
        };
        let len = positions.len() - start;
        if len == 0 {
            failure = Some(StreamError::ConstructionFailure {
                phase,
                constraints: vec![id],
                reason: "committed prefix already violates the item".into(),
            });
            return;
        }
        for &p in &positions[start..] {
            let n = p as usize + frontier;
            if n >= fresh_from {
                touched[n - fresh_from] = true;
            }
        }
        events.push(PhaseEvent {
            id,
            start,
            len,
            kind,
        });
    });
    if let Some(err) = failure {
        return Err(err);
    }
    events.sort_by_key(|e| e.id);

    let num_vars = window - frontier;
    let mut builder = InstanceBuilder::with_fair_bits(num_vars);
    for e in &events {
        let vars = &positions[e.start..e.start + e.len];
        match e.kind {
            Restricted::Constants { zero, one } => {
                let rows = [(zero, 0), (one, 1)]
                    .into_iter()
                    .filter(|&(on, _)| on)
                    .map(|(_, b)| Row::Constant(b));
                builder.add_event(vars, rows);
            }
            Restricted::Complement { vals_start } => {
                builder.add_event(
                    vars,
                    [Row::Values(&word_vals[vals_start..vals_start + e.len])],
                );
            }
        }
    }
    let ids: Vec<usize> = events.iter().map(|e| e.id).collect();
    drop(events);
    drop(positions);
    drop(word_vals);
    let instance = builder.build();

    let init: Vec<Option<u32>> = (frontier..window)
        .map(|n| {
            if n < fresh_from {
                Some(u32::from(bits[n]))
            } else if touched[n - fresh_from] {
                None
            } else {
                Some(0)
            }
        })
        .collect();
    let budget = default_budget(instance.num_events()).saturating_mul(scale);
    let seed = seed::indexed_seed(coloring.provenance.seed, phase as u64);
    let stall = (STALL_PER_EVENT * instance.num_events() as u64).max(MIN_STALL);
    let outcome = match instance.solve_until_stall(seed, budget, stall, &init) {
        Err(SolveFailure::NonConvergence { resamplings, .. }) => instance
            .walk(seed::indexed_seed(seed, 1), budget, &init)
            .map_err(|failure| match failure {
                SolveFailure::NonConvergence {
                    resamplings: steps,
                    recent,
                    violated,
                } => SolveFailure::NonConvergence {
                    resamplings: resamplings + steps,
                    recent,
                    violated,
                },
                other => other,
            }),
        other => other,
    };
    match outcome {
        Ok(solution) => {
            for (slot, v) in coloring.bits[frontier..window].iter_mut().zip(solution.values) {
                *slot = v as u8;
            }
            Ok(())
        }
        Err(SolveFailure::NonConvergence { resamplings, recent, violated }) => Err(StreamError::ConstructionFailure {
            phase,
            constraints: violated.iter().map(|&e| ids[e as usize]).collect(),
            reason: format!(
                "no convergence after {resamplings} resampling and walk steps (recently chosen {:?})",
                recent.iter().map(|&e| ids[e as usize]).collect::<Vec<_>>()
            ),
        }),
        Err(SolveFailure::Unsatisfiable { events, reason }) => Err(StreamError::ConstructionFailure {
            phase,
            constraints: events.iter().map(|&e| ids[e as usize]).collect(),
            reason,
        }),
    }
}

/// Items inside a committed prefix, checked against it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoverageReport {
    pub checked: usize,
    /// Ids of items the prefix does not satisfy, ascending.
    pub violated: Vec<usize>,
}

impl CoverageReport {
    pub fn passed(&self) -> bool {
        self.violated.is_empty()
    }
}

/// Checks every item with domain inside `[0, bits.len())`.
pub fn check_coloring(stream: &dyn ConstraintStream, bits: &[u8]) -> CoverageReport {
    let mut report = CoverageReport::default();
    stream.for_each_within(bits.len(), &mut |item| {
        report.checked += 1;
        if !item.satisfied_by(bits) {
            report.violated.push(item.id());
        }
    });
    report.violated.sort_unstable();
    report
}
