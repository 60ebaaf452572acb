//! Pair-function colorings built against staged set approximations.
//!
//! An addition-like function `f` on pairs of distinct naturals comes with a
//! growth witness `g` (`y > g(x, n)` implies `f(x, y) > n`) and a bound `b`
//! on how many `z` share a value `f(x, z)`. For a staged family of sets
//! (monotone `ce` enumerations or `sigma2` approximations that may change
//! their mind), the stream builders produce the sets `f(E, s)` whose
//! non-homogeneity rules out any member as part of a homogeneous solution.

mod estate;
mod family;
mod stream;
mod warmup;

use num_bigint::BigUint;
use num_traits::One;

use crate::ratio::Rational;
pub use estate::{e_state, member_schedule, EState, MemberSchedule, Segment};
pub use family::{gen_family, parse_family, write_family, FamilyMode, FamilyParams, StagedFamily};
pub use stream::{build_stream_comp, build_stream_main, PairStream, StreamMode};
pub use warmup::{baseline_single_diag, baseline_witnesses, pigeonhole_check, PigeonholeReport};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HindmanError {
    #[error("invalid parameter: {message}")]
    InvalidParameter {
        message: String,
        least_admissible: Option<usize>,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid staged family: {0}")]
    InvalidFamily(String),
    #[error("stage {stage} outside the family's {stage_count} stages")]
    StageOutOfRange { stage: usize, stage_count: usize },
    #[error("unknown addition-like function '{0}'")]
    UnknownFunction(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// A symmetric function on pairs of distinct naturals with a growth witness
/// and a multiplicity bound.
pub trait AdditionLike: std::fmt::Debug {
    fn name(&self) -> &str;

    /// `f(x, y)` for `x != y`.
    fn eval(&self, x: usize, y: usize) -> usize;

    /// `g(x, n)`: every `y > g(x, n)` has `f(x, y) > n`.
    fn growth(&self, x: usize, n: usize) -> usize;

    /// `b`: at most `b` values `z` share any `f(x, z)`.
    fn mult_bound(&self) -> usize;

    /// All `z != x` with `f(x, z) = v`, ascending.
    fn solutions(&self, x: usize, v: usize) -> Vec<usize> {
        (0..=self.growth(x, v))
            .filter(|&z| z != x && self.eval(x, z) == v)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sum;

impl AdditionLike for Sum {
    fn name(&self) -> &str {
        "sum"
    }
    fn eval(&self, x: usize, y: usize) -> usize {
        x + y
    }
    fn growth(&self, _x: usize, n: usize) -> usize {
        n
    }
    fn mult_bound(&self) -> usize {
        1
    }
    fn solutions(&self, x: usize, v: usize) -> Vec<usize> {
        match v.checked_sub(x) {
            Some(z) if z != x => vec![z],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AbsDiff;

impl AdditionLike for AbsDiff {
    fn name(&self) -> &str {
        "absdiff"
    }
    fn eval(&self, x: usize, y: usize) -> usize {
        x.abs_diff(y)
    }
    fn growth(&self, x: usize, n: usize) -> usize {
        x + n
    }
    fn mult_bound(&self) -> usize {
        2
    }
    fn solutions(&self, x: usize, v: usize) -> Vec<usize> {
        if v == 0 {
            return Vec::new();
        }
        x.checked_sub(v).into_iter().chain([x + v]).collect()
    }
}

pub fn builtin_addition_like(name: &str) -> Result<Box<dyn AdditionLike>, HindmanError> {
    match name {
        "sum" => Ok(Box::new(Sum)),
        "absdiff" => Ok(Box::new(AbsDiff)),
        other => Err(HindmanError::UnknownFunction(other.to_string())),
    }
}

/// `f(S, y) = {f(x, y) : x in S}`, sorted and deduplicated.
pub fn f_image(f: &dyn AdditionLike, set: &[usize], y: usize) -> Result<Vec<usize>, HindmanError> {
    if set.contains(&y) {
        return Err(HindmanError::InvalidInput(format!(
            "{y} belongs to the set"
        )));
    }
    let mut image: Vec<usize> = set.iter().map(|&x| f.eval(x, y)).collect();
    image.sort_unstable();
    image.dedup();
    Ok(image)
}

/// Cantor pairing: `pi(i, s) = (i + s)(i + s + 1)/2 + s`.
pub fn pair(i: usize, s: usize) -> usize {
    let d = i + s;
    d * (d + 1) / 2 + s
}

/// Inverse of [`pair`].
pub fn unpair(z: usize) -> (usize, usize) {
    let mut d = ((((8 * z as u128 + 1) as f64).sqrt() as usize).saturating_sub(1)) / 2;
    while d * (d + 1) / 2 > z {
        d -= 1;
    }
    while (d + 1) * (d + 2) / 2 <= z {
        d += 1;
    }
    let s = z - d * (d + 1) / 2;
    (d - s, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeRule {
    /// `m <= 2^(q m)`: at most `m` translates of one set meet a point.
    Comp,
    /// `b m^2 <= 2^(q m)`.
    Main,
}

fn size_rule_holds(b: usize, q: &Rational, rule: SizeRule, m: usize) -> bool {
    let (num, den) = (
        q.numer().to_biguint().unwrap(),
        q.denom().to_biguint().unwrap(),
    );
    let num = u32::try_from(num).expect("q numerator fits in u32");
    let den = u32::try_from(den).expect("q denominator fits in u32");
    let lhs = match rule {
        SizeRule::Comp => BigUint::from(m),
        SizeRule::Main => BigUint::from(b) * BigUint::from(m) * BigUint::from(m),
    };
    lhs.pow(den) <= BigUint::one() << (num as usize * m)
}

/// Whether `lhs(m+1)/lhs(m) <= 2^q`, after which the inequality, once true, stays true.
fn growth_dominates(q: &Rational, rule: SizeRule, m: usize) -> bool {
    let num = u32::try_from(q.numer().to_biguint().unwrap()).expect("fits");
    let den = u32::try_from(q.denom().to_biguint().unwrap()).expect("fits");
    let power = match rule {
        SizeRule::Comp => den,
        SizeRule::Main => 2 * den,
    };
    (BigUint::from(m).pow(power) << num as usize) >= BigUint::from(m + 1).pow(power)
}

/// Least `M >= 1` with the size inequality holding for every `m >= M`.
pub fn choose_m(b: usize, q: &Rational, rule: SizeRule) -> Result<usize, HindmanError> {
    if b == 0 || !crate::ratio::in_open_unit(q) {
        return Err(HindmanError::InvalidParameter {
            message: "need b >= 1 and q in (0,1)".into(),
            least_admissible: None,
        });
    }
    let mut top = 1;
    while !growth_dominates(q, rule, top) {
        top += 1;
    }
    while !size_rule_holds(b, q, rule, top) {
        top += 1;
    }
    while top > 1 && size_rule_holds(b, q, rule, top - 1) {
        top -= 1;
    }
    Ok(top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::from_ratio;

    #[test]
    fn builtins() {
        let sum = builtin_addition_like("sum").unwrap();
        let abs = builtin_addition_like("absdiff").unwrap();
        assert_eq!(abs.eval(3, 7), 4);
        assert_eq!(sum.eval(3, 7), 10);
        assert_eq!(sum.mult_bound(), 1);
        assert_eq!(abs.mult_bound(), 2);
        assert_eq!(sum.solutions(3, 10), vec![7]);
        assert_eq!(sum.solutions(5, 10), Vec::<usize>::new());
        assert_eq!(abs.solutions(7, 4), vec![3, 11]);
        assert_eq!(abs.solutions(2, 4), vec![6]);
        assert!(matches!(
            builtin_addition_like("xor"),
            Err(HindmanError::UnknownFunction(_))
        ));
    }

    #[test]
    fn solutions_match_scan() {
        for f in [
            builtin_addition_like("sum").unwrap(),
            builtin_addition_like("absdiff").unwrap(),
        ] {
            for x in 0..30 {
                for v in 0..60 {
                    let scan: Vec<usize> = (0..=f.growth(x, v))
                        .filter(|&z| z != x && f.eval(x, z) == v)
                        .collect();
                    assert_eq!(f.solutions(x, v), scan, "{} x={x} v={v}", f.name());
                }
            }
        }
    }

    #[test]
    fn images() {
        let sum = Sum;
        assert_eq!(f_image(&sum, &[1, 2, 3], 10).unwrap(), vec![11, 12, 13]);
        assert_eq!(f_image(&AbsDiff, &[1, 9], 5).unwrap(), vec![4]);
        assert_eq!(f_image(&sum, &[], 5).unwrap(), Vec::<usize>::new());
        assert!(f_image(&sum, &[1, 5], 5).is_err());
    }

    #[test]
    fn pairing_round_trip() {
        assert_eq!(pair(0, 0), 0);
        assert_eq!(pair(1, 0), 1);
        assert_eq!(pair(0, 1), 2);
        assert_eq!(pair(2, 0), 3);
        for z in 0..5000 {
            let (i, s) = unpair(z);
            assert_eq!(pair(i, s), z);
        }
    }

    #[test]
    fn least_sizes() {
        let half = from_ratio(1, 2);
        assert_eq!(choose_m(1, &half, SizeRule::Comp).unwrap(), 4);
        assert_eq!(choose_m(1, &half, SizeRule::Main).unwrap(), 16);
        assert_eq!(choose_m(2, &half, SizeRule::Main).unwrap(), 19);
        // brute-force check of "for all m >= M" over a long range
        for b in 1..=3 {
            let m0 = choose_m(b, &half, SizeRule::Main).unwrap();
            assert!((m0..400).all(|m| size_rule_holds(b, &half, SizeRule::Main, m)));
            assert!(!size_rule_holds(b, &half, SizeRule::Main, m0 - 1));
        }
    }
}
