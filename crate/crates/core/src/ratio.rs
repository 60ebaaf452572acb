//! Exact rational helpers shared by the certification and sparsity code.

use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed rational `{0}`")]
pub struct ParseRationalError(pub String);

/// Parses `p/q` or a bare integer `p`.
pub fn parse(text: &str) -> Result<Rational, ParseRationalError> {
    let bad = || ParseRationalError(text.to_string());
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
    let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Canonical `p/q` rendering (always with a denominator).
pub fn format(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

pub fn from_ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_int(value: usize) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// True iff `0 < value < 1`.
pub fn in_open_unit(value: &Rational) -> bool {
    value.is_positive() && *value < Rational::one()
}

/// True iff `0 < value <= 1`.
pub fn in_half_open_unit(value: &Rational) -> bool {
    value.is_positive() && *value <= Rational::one()
}

/// Exact test of `count <= 2^(q*m)` for a nonnegative rational `q`.
///
/// With `q = a/b` this is `count^b <= 2^(a*m)`, compared as big integers.
pub fn count_within_pow2(count: u64, q: &Rational, m: usize) -> bool {
    scaled_count_within_pow2(&BigUint::from(count), q, m)
}

/// Exact test of `value <= 2^(q*m)` for a nonnegative integer `value`.
pub fn scaled_count_within_pow2(value: &BigUint, q: &Rational, m: usize) -> bool {
    assert!(!q.is_negative(), "exponent rate must be nonnegative");
    let a = q.numer().to_biguint().expect("nonnegative numerator");
    let b = q.denom().to_u32().expect("denominator fits in u32");
    let exponent = a * BigUint::from(m);
    let exponent = exponent.to_u64().expect("exponent fits in u64");
    value.pow(b) <= (BigUint::one() << exponent)
}

/// Least integer `>= value`.
pub fn ceil(value: &Rational) -> BigInt {
    value.ceil().to_integer()
}
