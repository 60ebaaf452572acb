//! Small diagonalization examples: one two-element set, and the three
//! translates of two two-element sets.

use super::HindmanError;

/// Colors `[0, horizon)` so that `{a + s, b + s}` is split for every `s >= announce`.
///
/// `c(s) = 0` when `s < announce` or `s < d` (with `d = b - a`), otherwise
/// `c(s) = 1 - c(s - d)`.
pub fn baseline_single_diag(
    a: usize,
    b: usize,
    announce: usize,
    horizon: usize,
) -> Result<Vec<u8>, HindmanError> {
    if a >= b {
        return Err(HindmanError::InvalidInput(format!(
            "need a < b, got a = {a}, b = {b}"
        )));
    }
    let d = b - a;
    if horizon <= announce + 2 * d {
        return Err(HindmanError::InvalidInput(format!(
            "horizon {horizon} must exceed {}",
            announce + 2 * d
        )));
    }
    let mut c = vec![0u8; horizon];
    for s in 0..horizon {
        if s >= announce && s >= d {
            c[s] = 1 - c[s - d];
        }
    }
    Ok(c)
}

/// `(s, c(a + s), c(b + s))` for every `s >= announce` with `b + s` inside the coloring.
pub fn baseline_witnesses(a: usize, b: usize, announce: usize, c: &[u8]) -> Vec<(usize, u8, u8)> {
    (announce..c.len().saturating_sub(b))
        .map(|s| (s, c[a + s], c[b + s]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PigeonholeReport {
    pub max_s: usize,
    /// Every 2-coloring makes one of `E0+s, E0+(s+1), E1+s` homogeneous, for all `s <= max_s`.
    pub corrected_forced: bool,
    /// Colorings examined for the corrected triple.
    pub colorings_checked: u64,
    /// Lexicographically least coloring of `s..s+3` avoiding `E0+s, E1+s, E1+(s+1)`.
    pub literal_counterexample: Option<String>,
}

impl PigeonholeReport {
    pub fn summary(&self) -> String {
        let corrected = if self.corrected_forced {
            format!("forced for all s <= {}", self.max_s)
        } else {
            "NOT forced".to_string()
        };
        let literal = match &self.literal_counterexample {
            Some(p) => format!("counterexample pattern {p}"),
            None => "forced".to_string(),
        };
        format!("corrected triple: {corrected}; literal triple: {literal}")
    }
}

/// Exhaustive check for `E0 = {0, 1}`, `E1 = {0, 2}`.
pub fn pigeonhole_check(max_s: usize) -> Result<PigeonholeReport, HindmanError> {
    if max_s == 0 || max_s > 24 {
        return Err(HindmanError::InvalidInput(
            "max_s must lie in 1..=24".into(),
        ));
    }
    let homogeneous = |c: u32, x: usize, y: usize| (c >> x) & 1 == (c >> y) & 1;
    let mut forced = true;
    let mut checked = 0u64;
    for s in 0..=max_s {
        let len = s + 3;
        for c in 0u32..(1 << len) {
            checked += 1;
            let hit = homogeneous(c, s, s + 1)
                || homogeneous(c, s + 1, s + 2)
                || homogeneous(c, s, s + 2);
            forced &= hit;
        }
    }
    let literal = (0u32..16)
        .map(|c| {
            // bit k of the pattern is position s + k, written most significant first
            let bit = |k: usize| (c >> (3 - k)) & 1;
            (c, bit(0) == bit(1) || bit(0) == bit(2) || bit(1) == bit(3))
        })
        .find(|&(_, hit)| !hit)
        .map(|(c, _)| format!("{c:04b}"));
    Ok(PigeonholeReport {
        max_s,
        corrected_forced: forced,
        colorings_checked: checked,
        literal_counterexample: literal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrence_patterns() {
        let c = baseline_single_diag(1, 3, 0, 16).unwrap();
        assert_eq!(c, vec![0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1]);
        assert!(baseline_witnesses(1, 3, 0, &c)
            .iter()
            .all(|&(_, x, y)| x != y));

        let c = baseline_single_diag(1, 3, 5, 12).unwrap();
        assert_eq!(&c[..9], &[0, 0, 0, 0, 0, 1, 1, 0, 0]);
        let w = baseline_witnesses(1, 3, 5, &c);
        assert!(!w.is_empty() && w.iter().all(|&(_, x, y)| x != y));

        assert!(baseline_single_diag(3, 3, 0, 10).is_err());
        assert!(baseline_single_diag(1, 3, 5, 9).is_err());
    }

    #[test]
    fn triples() {
        let r = pigeonhole_check(12).unwrap();
        assert!(r.corrected_forced);
        assert_eq!(r.literal_counterexample.as_deref(), Some("0110"));
        assert_eq!(
            r.summary(),
            "corrected triple: forced for all s <= 12; literal triple: counterexample pattern 0110"
        );
        // s = 0 alone: 8 colorings of {0, 1, 2}
        assert_eq!(pigeonhole_check(1).unwrap().colorings_checked, 8 + 16);
    }
}
