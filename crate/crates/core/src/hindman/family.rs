//! Staged set families and their text format.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::HindmanError;
use crate::effective::fingerprint_of;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyMode {
    /// Monotone enumerations.
    Ce,
    /// Stagewise approximations; elements may leave and re-enter.
    Sigma2,
}

impl FamilyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyMode::Ce => "ce",
            FamilyMode::Sigma2 => "sigma2",
        }
    }

    pub fn parse(text: &str) -> Result<Self, HindmanError> {
        match text {
            "ce" => Ok(FamilyMode::Ce),
            "sigma2" => Ok(FamilyMode::Sigma2),
            other => Err(HindmanError::InvalidInput(format!(
                "unknown family mode '{other}'"
            ))),
        }
    }
}

/// Finite stagewise approximations of `count` sets.
///
/// Each member is stored as its change points `(stage, full set)`; the set is
/// empty before the first change point and constant between change points.
/// Stages at or beyond `stage_count` repeat the last stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagedFamily {
    mode: FamilyMode,
    stage_count: usize,
    members: Vec<Vec<(usize, Vec<usize>)>>,
}

impl StagedFamily {
    /// Validates `x < s` for every element present at stage `s`, strictly
    /// increasing change stages below `stage_count`, and monotonicity in `ce` mode.
    pub fn new(
        mode: FamilyMode,
        stage_count: usize,
        mut members: Vec<Vec<(usize, Vec<usize>)>>,
    ) -> Result<Self, HindmanError> {
        if stage_count == 0 {
            return Err(HindmanError::InvalidFamily(
                "stage_count must be at least 1".into(),
            ));
        }
        for (i, changes) in members.iter_mut().enumerate() {
            let mut prev_stage = None;
            let mut prev_set: &[usize] = &[];
            for (stage, set) in changes.iter_mut() {
                set.sort_unstable();
                set.dedup();
                if prev_stage.is_some_and(|p| p >= *stage) || *stage >= stage_count {
                    return Err(HindmanError::InvalidFamily(format!(
                        "member {i}: change stages must increase and stay below {stage_count}"
                    )));
                }
                if let Some(&x) = set.iter().find(|&&x| x >= *stage) {
                    return Err(HindmanError::InvalidFamily(format!(
                        "member {i}: element {x} present at stage {stage} violates x < s"
                    )));
                }
                if mode == FamilyMode::Ce && prev_set.iter().any(|x| set.binary_search(x).is_err())
                {
                    return Err(HindmanError::InvalidFamily(format!(
                        "member {i}: stage {stage} drops elements of a monotone enumeration"
                    )));
                }
                prev_stage = Some(*stage);
                prev_set = set;
            }
        }
        Ok(StagedFamily {
            mode,
            stage_count,
            members,
        })
    }

    pub fn mode(&self) -> FamilyMode {
        self.mode
    }

    pub fn stage_count(&self) -> usize {
        self.stage_count
    }

    pub fn count(&self) -> usize {
        self.members.len()
    }

    /// Change points of member `i`.
    pub fn changes(&self, i: usize) -> &[(usize, Vec<usize>)] {
        &self.members[i]
    }

    /// The member's set at stage `s` (frozen beyond the last stage).
    pub fn member_at(&self, i: usize, s: usize) -> &[usize] {
        let changes = &self.members[i];
        let k = changes.partition_point(|(stage, _)| *stage <= s);
        if k == 0 {
            &[]
        } else {
            &changes[k - 1].1
        }
    }

    /// The set at the last stage.
    pub fn final_set(&self, i: usize) -> &[usize] {
        self.members[i]
            .last()
            .map_or(&[], |(_, set)| set.as_slice())
    }

    pub fn fingerprint(&self) -> String {
        let mut text = Vec::new();
        write_family(self, &mut text).expect("writing to memory");
        fingerprint_of([std::str::from_utf8(&text).expect("ascii")])
    }
}

/// Writes `family <mode> <count> <stage_count>` and one `at <i> <s> <set>` per change point.
pub fn write_family(family: &StagedFamily, out: &mut dyn std::io::Write) -> std::io::Result<()> {
    writeln!(
        out,
        "family {} {} {}",
        family.mode.as_str(),
        family.count(),
        family.stage_count
    )?;
    for (i, changes) in family.members.iter().enumerate() {
        for (stage, set) in changes {
            let mut line = format!("at {i} {stage}");
            for x in set {
                write!(line, " {x}").expect("string write");
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

pub fn parse_family(text: &str) -> Result<StagedFamily, HindmanError> {
    let bad = |line: usize, message: String| HindmanError::Format { line, message };
    let mut header = None;
    let mut members: Vec<Vec<(usize, Vec<usize>)>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let nums = |from: usize| -> Result<Vec<usize>, HindmanError> {
            tokens[from..]
                .iter()
                .map(|t| {
                    t.parse()
                        .map_err(|_| bad(line, format!("bad number '{t}'")))
                })
                .collect()
        };
        match tokens[0] {
            "family" if header.is_none() && tokens.len() == 4 => {
                let mode = FamilyMode::parse(tokens[1]).map_err(|e| bad(line, e.to_string()))?;
                let v = nums(2)?;
                members = vec![Vec::new(); v[0]];
                header = Some((mode, v[1]));
            }
            "at" if header.is_some() && tokens.len() >= 3 => {
                let v = nums(1)?;
                let (i, stage) = (v[0], v[1]);
                let member = members
                    .get_mut(i)
                    .ok_or_else(|| bad(line, format!("member {i} out of range")))?;
                member.push((stage, v[2..].to_vec()));
            }
            _ => return Err(bad(line, format!("unexpected line '{raw}'"))),
        }
    }
    let (mode, stage_count) = header.ok_or_else(|| bad(0, "missing family header".into()))?;
    StagedFamily::new(mode, stage_count, members)
}

/// Shape of generated families.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyParams {
    /// Permanent elements a full member 0 gets; member `i` gets
    /// `target_base + i * target_step` plus up to `surplus` more.
    pub target_base: usize,
    pub target_step: usize,
    pub surplus: usize,
    /// Chance a member is left short of its target.
    pub short_fraction: f64,
    /// Elements are drawn below this value.
    pub value_span: usize,
    /// An element `x` enters within `entry_jitter` stages after `x + 1`.
    pub entry_jitter: usize,
    /// Mind changes per element after entering (`sigma2` only).
    pub max_mind_changes: usize,
    /// Chance a `sigma2` member settles within the first quarter of the stages.
    pub stabilize_fraction: f64,
}

impl FamilyParams {
    /// Targets sized for `E` sets of `M + i` (ce) or `b (M + i)` (sigma2) elements.
    pub fn for_threshold(mode: FamilyMode, min_size: usize, mult_bound: usize) -> Self {
        let b = match mode {
            FamilyMode::Ce => 1,
            FamilyMode::Sigma2 => mult_bound,
        };
        FamilyParams {
            target_base: b * min_size,
            target_step: b,
            surplus: 4,
            short_fraction: 0.1,
            value_span: 256,
            entry_jitter: 64,
            max_mind_changes: 3,
            stabilize_fraction: 0.8,
        }
    }
}

struct Timeline {
    value: usize,
    /// Stages where membership flips, starting with the entry.
    flips: Vec<usize>,
}

/// Deterministic mock family: `count` members over `stage_count` stages.
pub fn gen_family(
    seed: u64,
    count: usize,
    stage_count: usize,
    mode: FamilyMode,
    params: &FamilyParams,
) -> Result<StagedFamily, HindmanError> {
    if count == 0 || stage_count < 2 {
        return Err(HindmanError::InvalidParameter {
            message: "need at least one member and two stages".into(),
            least_admissible: None,
        });
    }
    let quarter = (stage_count / 4).max(2);
    let members = (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::indexed_seed(seed, i as u64));
            let target = params.target_base + i * params.target_step;
            let short = rng.gen_bool(params.short_fraction.clamp(0.0, 1.0));
            let settles =
                mode == FamilyMode::Ce || rng.gen_bool(params.stabilize_fraction.clamp(0.0, 1.0));
            // the last stage by which this member's elements stop changing
            let settle_by = if settles && mode == FamilyMode::Sigma2 {
                quarter
            } else {
                stage_count
            };
            let permanent = if short {
                rng.gen_range(0..target.max(1))
            } else {
                target + rng.gen_range(0..=params.surplus)
            };
            let transient = match mode {
                FamilyMode::Ce => 0,
                FamilyMode::Sigma2 => rng.gen_range(0..=params.surplus),
            };
            let total = permanent + transient;
            let span = params
                .value_span
                .max(2 * total)
                .min(settle_by.saturating_sub(1).max(total));
            let values = index::sample(&mut rng, span, total.min(span)).into_vec();
            let mut timelines = Vec::with_capacity(values.len());
            for (k, x) in values.into_iter().enumerate() {
                let entry = x + 1 + rng.gen_range(0..=params.entry_jitter);
                if entry >= settle_by {
                    continue;
                }
                let must_stay = k < permanent;
                let mut flips = vec![entry];
                if mode == FamilyMode::Sigma2 && params.max_mind_changes > 0 {
                    let mut changes = rng.gen_range(0..=params.max_mind_changes);
                    if must_stay && changes % 2 == 1 {
                        changes -= 1;
                    } else if !must_stay && changes % 2 == 0 {
                        // transient elements leave for good
                        changes = (changes + 1).min(params.max_mind_changes);
                        if changes % 2 == 0 {
                            changes -= 1;
                        }
                    }
                    let room = settle_by - entry - 1;
                    if changes > room {
                        continue;
                    }
                    let mut later: Vec<usize> = index::sample(&mut rng, room, changes)
                        .into_iter()
                        .map(|d| entry + 1 + d)
                        .collect();
                    later.sort_unstable();
                    if !settles && changes > 0 && stage_count - 3 * quarter > changes {
                        // unsettled members flip something late
                        let last = later.len() - 1;
                        let floor = later
                            .get(last.wrapping_sub(1))
                            .copied()
                            .unwrap_or(entry)
                            .max(3 * quarter);
                        if floor + 1 < stage_count {
                            later[last] = rng.gen_range(floor + 1..stage_count);
                        }
                    }
                    flips.extend(later);
                } else if !must_stay {
                    continue;
                }
                timelines.push(Timeline { value: x, flips });
            }
            changes_from(&timelines)
        })
        .collect();
    StagedFamily::new(mode, stage_count, members)
}

fn changes_from(timelines: &[Timeline]) -> Vec<(usize, Vec<usize>)> {
    let stages: BTreeSet<usize> = timelines
        .iter()
        .flat_map(|t| t.flips.iter().copied())
        .collect();
    let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
    for s in stages {
        let set: Vec<usize> = timelines
            .iter()
            .filter(|t| t.flips.partition_point(|&f| f <= s) % 2 == 1)
            .map(|t| t.value)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if out.last().is_none_or(|(_, prev)| *prev != set) {
            out.push((s, set));
        }
    }
    out
}
