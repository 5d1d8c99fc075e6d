use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact arbitrary-precision rational. Always kept in canonical form
/// (positive denominator, reduced).
pub type Rational = BigRational;

/// A dense vector of rationals.
pub type RationalVector = Vec<Rational>;

/// Rational from a machine integer.
pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// `numer / denom` from machine integers. Panics on a zero denominator.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    assert!(denom != 0, "zero denominator");
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Vector of rationals from machine integers.
pub fn int_vector(values: &[i64]) -> RationalVector {
    values.iter().map(|&v| int(v)).collect()
}

/// Canonical text form: `p/q`, or `p` when the denominator is one.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn format_vector(values: &[Rational]) -> Vec<String> {
    values.iter().map(format_rational).collect()
}

fn parse_err(text: &str, reason: impl Into<String>) -> Error {
    Error::ParseRational {
        text: text.to_string(),
        reason: reason.into(),
    }
}

fn parse_integer(text: &str, part: &str) -> Result<BigInt> {
    let digits = part.strip_prefix(['+', '-']).unwrap_or(part);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(parse_err(text, format!("{part:?} is not an integer")));
    }
    part.parse::<BigInt>()
        .map_err(|e| parse_err(text, e.to_string()))
}

/// Parses `p/q`, a plain integer, or a finite decimal such as `-0.75`.
///
/// Decimals are converted digit by digit, so `0.1` is exactly `1/10`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(parse_err(text, "empty string"));
    }

    if let Some((numer, denom)) = trimmed.split_once('/') {
        let numer = parse_integer(text, numer.trim())?;
        let denom = parse_integer(text, denom.trim())?;
        if denom.is_zero() {
            return Err(parse_err(text, "zero denominator"));
        }
        return Ok(Rational::new(numer, denom));
    }

    if let Some((whole, frac)) = trimmed.split_once('.') {
        let (negative, whole) = match whole.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, whole.strip_prefix('+').unwrap_or(whole)),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(parse_err(text, "no digits"));
        }
        let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(whole) || !all_digits(frac) {
            return Err(parse_err(text, "malformed decimal"));
        }
        let digits = format!("{whole}{frac}");
        let mut numer: BigInt = digits
            .parse()
            .map_err(|e: num_bigint::ParseBigIntError| parse_err(text, e.to_string()))?;
        if negative {
            numer = -numer;
        }
        let denom = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(Rational::new(numer, denom));
    }

    Ok(Rational::from_integer(parse_integer(text, trimmed)?))
}

pub fn parse_vector<S: AsRef<str>>(items: &[S]) -> Result<RationalVector> {
    items.iter().map(|s| parse_rational(s.as_ref())).collect()
}

/// Parses a comma-separated list such as `1/3,1/3,1/3`.
pub fn parse_list(text: &str) -> Result<RationalVector> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(parse_rational).collect()
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sum(values: &[Rational]) -> Rational {
    values.iter().sum()
}

pub fn is_probability_vector(values: &[Rational]) -> bool {
    values.iter().all(|v| !v.is_negative()) && sum(values).is_one()
}
