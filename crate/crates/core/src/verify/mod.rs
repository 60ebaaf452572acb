//! Independent checks of colorings: pair homogeneity, exhaustive subset
//! search, audits of the pair-stream constructions, and Monte Carlo
//! estimates of homogeneity probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::hindman::{member_schedule, AdditionLike, StagedFamily, StreamMode};
use crate::ratio::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("value {needed} lies beyond the committed prefix of length {committed}")]
    InsufficientHorizon { needed: usize, committed: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("mode mismatch: {0}")]
    Mismatch(String),
}

/// Whether every pair of `h` gets the same color `c(f(x, y))`.
pub fn is_f_homogeneous(h: &[usize], f: &dyn AdditionLike, c: &[u8]) -> Result<bool, VerifyError> {
    if h.len() < 2 {
        return Err(VerifyError::InvalidInput(
            "need at least two elements".into(),
        ));
    }
    let mut color = None;
    let mut homogeneous = true;
    for (k, &x) in h.iter().enumerate() {
        for &y in &h[k + 1..] {
            if x == y {
                return Err(VerifyError::InvalidInput(format!(
                    "element {x} listed twice"
                )));
            }
            let v = f.eval(x, y);
            let bit = *c.get(v).ok_or(VerifyError::InsufficientHorizon {
                needed: v,
                committed: c.len(),
            })?;
            if *color.get_or_insert(bit) != bit {
                homogeneous = false;
            }
        }
    }
    Ok(homogeneous)
}

/// Lexicographically least `target`-element f-homogeneous subset of `[0, window)`.
pub fn find_homogeneous_subset(
    window: usize,
    f: &dyn AdditionLike,
    c: &[u8],
    target: usize,
) -> Result<Option<Vec<usize>>, VerifyError> {
    for x in 0..window {
        for y in x + 1..window {
            let v = f.eval(x, y);
            if v >= c.len() {
                return Err(VerifyError::InsufficientHorizon {
                    needed: v,
                    committed: c.len(),
                });
            }
        }
    }
    if target > window {
        return Ok(None);
    }
    let mut chosen = Vec::with_capacity(target);
    Ok(extend(window, f, c, target, 0, None, &mut chosen).then_some(chosen))
}

fn extend(
    window: usize,
    f: &dyn AdditionLike,
    c: &[u8],
    target: usize,
    from: usize,
    color: Option<u8>,
    chosen: &mut Vec<usize>,
) -> bool {
    if chosen.len() == target {
        return true;
    }
    let needed = target - chosen.len();
    for y in from..window {
        if window - y < needed {
            break;
        }
        let mut col = color;
        let fits = chosen.iter().all(|&x| {
            let bit = c[f.eval(x, y)];
            *col.get_or_insert(bit) == bit
        });
        if fits {
            chosen.push(y);
            if extend(window, f, c, target, y + 1, col, chosen) {
                return true;
            }
            chosen.pop();
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MemberVerdict {
    /// `E_i` settles; its late images are audited.
    Stabilized,
    /// `E_i` is eventually empty: the member has fewer elements than its bound.
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemberAudit {
    pub member: usize,
    pub verdict: MemberVerdict,
    /// Size a member must reach before it is diagonalized against.
    pub bound: usize,
    /// Final `E` set (empty when vacuous).
    pub e_set: Vec<usize>,
    /// Stage from which `E` stays constant.
    pub stable_from: Option<usize>,
    /// Emitted images inside the audited region.
    pub translates_checked: usize,
    /// In-region stages whose image the emission rule withheld.
    pub not_emitted: usize,
    /// Least stage from which every in-region image was emitted.
    pub observed_threshold: Option<usize>,
    /// Stages whose emitted image is monochromatic.
    pub violations: Vec<usize>,
    /// Images were checked and none is monochromatic: `E` lies in no
    /// homogeneous set whose pairs with `s` fall in the region.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditSummary {
    pub members: usize,
    pub stabilized: usize,
    pub vacuous: usize,
    pub excluded: usize,
    pub translates_checked: usize,
    pub not_emitted: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub mode: String,
    pub function: String,
    pub min_size: usize,
    pub committed_len: usize,
    pub guard: usize,
    /// The immunity bound as a formula in `i`.
    pub bound: String,
    pub members: Vec<MemberAudit>,
    pub summary: AuditSummary,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.summary.violations == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Checks every emitted image `f(E, s)` of each stabilized member that lies
/// inside `[guard, committed)` for non-homogeneity.
pub fn audit_solution(
    committed: &[u8],
    family: &StagedFamily,
    f: &dyn AdditionLike,
    min_size: usize,
    mode: StreamMode,
    guard: usize,
) -> Result<AuditReport, VerifyError> {
    let expected = mode.family_mode();
    if family.mode() != expected {
        return Err(VerifyError::Mismatch(format!(
            "{} audits need a {} family, got {}",
            mode.as_str(),
            expected.as_str(),
            family.mode().as_str()
        )));
    }
    if mode == StreamMode::Comp && f.name() != "sum" {
        return Err(VerifyError::Mismatch(
            "comp audits use sum translates".into(),
        ));
    }
    let len = committed.len();
    if guard >= len {
        return Err(VerifyError::InsufficientHorizon {
            needed: guard,
            committed: len,
        });
    }
    let b = f.mult_bound();
    let bound_of = |i: usize| match mode {
        StreamMode::Comp => min_size + i,
        StreamMode::Main => b * (min_size + i),
    };
    let members: Vec<MemberAudit> = (0..family.count())
        .map(|i| audit_member(committed, family, f, min_size, mode, guard, i, bound_of(i)))
        .collect();
    let summary = AuditSummary {
        members: members.len(),
        stabilized: members
            .iter()
            .filter(|m| m.verdict == MemberVerdict::Stabilized)
            .count(),
        vacuous: members
            .iter()
            .filter(|m| m.verdict == MemberVerdict::Vacuous)
            .count(),
        excluded: members.iter().filter(|m| m.excluded).count(),
        translates_checked: members.iter().map(|m| m.translates_checked).sum(),
        not_emitted: members.iter().map(|m| m.not_emitted).sum(),
        violations: members.iter().map(|m| m.violations.len()).sum(),
    };
    let bound = match mode {
        StreamMode::Comp => format!("i -> {min_size} + i"),
        StreamMode::Main => format!("i -> {b} * ({min_size} + i)"),
    };
    Ok(AuditReport {
        mode: mode.as_str().to_string(),
        function: f.name().to_string(),
        min_size,
        committed_len: len,
        guard,
        bound,
        members,
        summary,
    })
}

#[allow(clippy::too_many_arguments)]
fn audit_member(
    committed: &[u8],
    family: &StagedFamily,
    f: &dyn AdditionLike,
    min_size: usize,
    mode: StreamMode,
    guard: usize,
    i: usize,
    bound: usize,
) -> MemberAudit {
    let len = committed.len();
    let schedule = member_schedule(family, f, min_size, i);
    let last = schedule.last();
    let mut audit = MemberAudit {
        member: i,
        verdict: MemberVerdict::Vacuous,
        bound,
        e_set: Vec::new(),
        stable_from: None,
        translates_checked: 0,
        not_emitted: 0,
        observed_threshold: None,
        violations: Vec::new(),
        excluded: false,
    };
    if last.elems.is_empty() {
        return audit;
    }
    let e = &last.elems;
    let s0 = last.start;
    audit.verdict = MemberVerdict::Stabilized;
    audit.e_set = e.clone();
    audit.stable_from = Some(s0);

    // max f(E_u, u) over earlier stages u < s0 with E_u nonempty
    let mut prior: Option<usize> = None;
    for (k, seg) in schedule.segments.iter().enumerate() {
        let Some(end) = schedule.end(k) else { break };
        if seg.elems.is_empty() {
            continue;
        }
        for u in seg.start..end {
            let top = seg
                .elems
                .iter()
                .map(|&x| f.eval(x, u))
                .max()
                .expect("nonempty");
            prior = Some(prior.map_or(top, |p| p.max(top)));
        }
    }

    // beyond this stage every image lies above the committed prefix
    let last_stage = e.iter().map(|&x| f.growth(x, len)).max().expect("nonempty");
    let mut last_withheld = None;
    let mut first_in_region = None;
    for s in s0..=last_stage {
        let mut image: Vec<usize> = e.iter().map(|&x| f.eval(x, s)).collect();
        image.sort_unstable();
        image.dedup();
        let (min, max) = (image[0], image[image.len() - 1]);
        if min < guard || max >= len {
            continue;
        }
        first_in_region.get_or_insert(s);
        let emitted = match mode {
            StreamMode::Comp => true,
            StreamMode::Main => min > s0 && prior.is_none_or(|p| min > p),
        };
        if !emitted {
            audit.not_emitted += 1;
            last_withheld = Some(s);
            continue;
        }
        audit.translates_checked += 1;
        let first = committed[image[0]];
        if image.iter().all(|&v| committed[v] == first) {
            audit.violations.push(s);
        }
    }
    audit.observed_threshold = match last_withheld {
        Some(s) => Some(s + 1),
        None => first_in_region,
    };
    audit.excluded = audit.translates_checked > 0 && audit.violations.is_empty();
    audit
}

/// Fraction of uniformly random colorings of `size` cells that are constant.
pub fn monte_carlo_homogeneity(
    size: usize,
    trials: u64,
    seed: u64,
) -> Result<Rational, VerifyError> {
    if size == 0 || trials == 0 {
        return Err(VerifyError::InvalidInput(
            "size and trials must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..trials {
        let mut remaining = size;
        let mut seen = 0u8; // bit 0: saw a 0, bit 1: saw a 1
        while remaining > 0 {
            let take = remaining.min(64);
            let word: u64 = rng.gen();
            let mask = if take == 64 {
                u64::MAX
            } else {
                (1u64 << take) - 1
            };
            let bits = word & mask;
            if bits != 0 {
                seen |= 2;
            }
            if bits != mask {
                seen |= 1;
            }
            remaining -= take;
        }
        if seen != 3 {
            hits += 1;
        }
    }
    Ok(Rational::new(hits.into(), trials.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hindman::{AbsDiff, Sum};
    use crate::ratio::from_ratio;

    #[test]
    fn homogeneity() {
        let c = [0, 0, 1, 1, 0, 0, 1, 1];
        assert!(is_f_homogeneous(&[0, 5], &Sum, &c).unwrap());
        assert!(!is_f_homogeneous(&[0, 1, 2], &Sum, &c).unwrap());
        assert!(!is_f_homogeneous(&[2, 1, 0], &Sum, &c).unwrap());
        assert!(matches!(
            is_f_homogeneous(&[4, 5], &Sum, &c),
            Err(VerifyError::InsufficientHorizon {
                needed: 9,
                committed: 8
            })
        ));
        assert!(is_f_homogeneous(&[3], &Sum, &c).is_err());
    }

    #[test]
    fn subset_search() {
        let zeros = vec![0u8; 64];
        assert_eq!(
            find_homogeneous_subset(10, &Sum, &zeros, 4).unwrap(),
            Some(vec![0, 1, 2, 3])
        );
        let c: Vec<u8> = (0..64).map(|n| (n % 2) as u8).collect();
        assert_eq!(
            find_homogeneous_subset(8, &Sum, &c, 2).unwrap(),
            Some(vec![0, 1])
        );
        // x + y is even iff x, y share parity
        assert_eq!(
            find_homogeneous_subset(8, &Sum, &c, 4).unwrap(),
            Some(vec![0, 2, 4, 6])
        );
        assert!(find_homogeneous_subset(40, &Sum, &c, 4).is_err());
        assert_eq!(find_homogeneous_subset(3, &AbsDiff, &c, 5).unwrap(), None);
    }

    #[test]
    fn monte_carlo_edges() {
        assert_eq!(
            monte_carlo_homogeneity(1, 100, 0).unwrap(),
            from_ratio(1, 1)
        );
        let half = monte_carlo_homogeneity(2, 20_000, 1).unwrap();
        assert!(half > from_ratio(12, 25) && half < from_ratio(13, 25));
        let big = monte_carlo_homogeneity(100, 1000, 2).unwrap();
        assert_eq!(big, from_ratio(0, 1));
        assert!(monte_carlo_homogeneity(0, 10, 0).is_err());
    }
}
