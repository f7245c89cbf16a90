//! Exact rational numbers.
//!
//! Every real-valued quantity in the crate (types, costs, valuations,
//! transfers) is a [`Rational`]: an arbitrary-precision fraction kept in
//! lowest terms with a positive denominator.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal `{0}` (expected an integer, a decimal or p/q)")]
pub struct ParseRationalError(pub String);

/// Integer-valued rational.
pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// `numer / denom`. Panics on a zero denominator.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Parses `42`, `-3`, `2.75`, `.5` or `7/3`.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let (negative, digits) = match whole.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, whole.strip_prefix('+').unwrap_or(whole)),
        };
        let all_digits = |t: &str| t.chars().all(|c| c.is_ascii_digit());
        if !all_digits(digits) || !all_digits(frac) || (digits.is_empty() && frac.is_empty()) {
            return Err(err());
        }
        let mantissa = BigInt::from_str(&format!("0{digits}{frac}")).map_err(|_| err())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let value = Rational::new(mantissa, scale);
        return Ok(if negative { -value } else { value });
    }
    BigInt::from_str(s).map(Rational::from_integer).map_err(|_| err())
}

/// `p` for integers, `p/q` otherwise. Never goes through binary floats.
pub fn format_rational(value: &Rational) -> String {
    value.to_string()
}

/// `|value|` as a rational.
pub fn abs(value: &Rational) -> Rational {
    value.abs()
}
