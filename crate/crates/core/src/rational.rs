//! Exact rational scalars and the small amount of vector arithmetic the
//! cone and LP code needs.
//!
//! Every quantity in this crate is a [`Rat`]: an arbitrary-precision fraction
//! kept in lowest terms with a positive denominator. Nothing is ever rounded.

use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational number (lowest terms, positive denominator).
pub type Rat = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid rational {text:?}: {reason}")]
pub struct ParseRatError {
    pub text: String,
    pub reason: &'static str,
}

/// Builds `num / den`. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"p"`, `"-p"` or `"p/q"` with integer `p`, `q` (q nonzero).
pub fn parse_rat(text: &str) -> Result<Rat, ParseRatError> {
    let err = |reason| ParseRatError {
        text: text.to_string(),
        reason,
    };
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(err("empty string"));
    }
    let (num, den) = match trimmed.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (trimmed, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| err("numerator is not an integer"))?;
    let den = BigInt::from_str(den).map_err(|_| err("denominator is not an integer"))?;
    if den.is_zero() {
        return Err(err("zero denominator"));
    }
    Ok(Rat::new(num, den))
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rat(value: &Rat) -> String {
    value.to_string()
}

pub fn parse_vec(items: &[String]) -> Result<Vec<Rat>, ParseRatError> {
    items.iter().map(|s| parse_rat(s)).collect()
}

pub fn format_vec(items: &[Rat]) -> Vec<String> {
    items.iter().map(format_rat).collect()
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    // Accumulate over a common denominator and reduce once at the end.
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for (x, y) in a.iter().zip(b) {
        if x.is_zero() || y.is_zero() {
            continue;
        }
        let tn = x.numer() * y.numer();
        let td = x.denom() * y.denom();
        if td == den {
            num += tn;
        } else if td.is_one() {
            num += tn * &den;
        } else {
            num = num * &td + tn * &den;
            den *= td;
        }
    }
    Rat::new(num, den)
}

pub fn add(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Rat], k: &Rat) -> Vec<Rat> {
    a.iter().map(|x| x * k).collect()
}

pub fn neg(a: &[Rat]) -> Vec<Rat> {
    a.iter().map(|x| -x).collect()
}

pub fn zeros(n: usize) -> Vec<Rat> {
    vec![Rat::zero(); n]
}

pub fn unit(n: usize, i: usize) -> Vec<Rat> {
    let mut v = zeros(n);
    v[i] = Rat::one();
    v
}

pub fn is_zero_vec(a: &[Rat]) -> bool {
    a.iter().all(Zero::is_zero)
}

pub fn norm1(a: &[Rat]) -> Rat {
    a.iter().fold(Rat::zero(), |acc, x| acc + x.abs())
}

/// Positive rescaling so the first nonzero coordinate has absolute value 1.
/// The direction of the vector is preserved; the zero vector is returned as is.
pub fn normalize_ray(a: &[Rat]) -> Vec<Rat> {
    match a.iter().find(|x| !x.is_zero()) {
        Some(lead) => {
            let k = lead.abs().recip();
            scale(a, &k)
        }
        None => a.to_vec(),
    }
}

/// Positive rescaling onto the primitive integer vector of the same ray
/// (denominators cleared, gcd of the entries divided out).
pub fn primitive_integer(a: &[Rat]) -> Vec<Rat> {
    if is_zero_vec(a) {
        return a.to_vec();
    }
    let lcm = a
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = a.iter().map(|x| (x * Rat::from_integer(lcm.clone())).to_integer()).collect();
    let gcd = ints
        .iter()
        .filter(|x| !x.is_zero())
        .fold(BigInt::zero(), |acc, x| acc.gcd(x));
    ints.into_iter()
        .map(|x| Rat::from_integer(x / &gcd))
        .collect()
}

/// Lexicographic comparison of equal-length vectors.
pub fn lex_cmp(a: &[Rat], b: &[Rat]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Renders a vector as `(a, b, c)` for messages.
pub fn show(a: &[Rat]) -> String {
    let parts: Vec<String> = a.iter().map(format_rat).collect();
    format!("({})", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rat("1/3").unwrap(), rat(1, 3));
        assert_eq!(parse_rat("-4/6").unwrap(), rat(-2, 3));
        assert_eq!(parse_rat("7").unwrap(), int(7));
        assert_eq!(parse_rat(" 2 / 4 ").unwrap(), rat(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_rat("").is_err());
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
        assert!(parse_rat("1.5").is_err());
    }

    #[test]
    fn formatting_is_canonical() {
        assert_eq!(format_rat(&rat(2, 4)), "1/2");
        assert_eq!(format_rat(&int(3)), "3");
        assert_eq!(format_rat(&rat(-6, 3)), "-2");
    }

    #[test]
    fn ray_normalization_keeps_direction() {
        assert_eq!(normalize_ray(&[int(2), int(-1)]), vec![int(1), rat(-1, 2)]);
        assert_eq!(normalize_ray(&[int(-1), int(2)]), vec![int(-1), int(2)]);
        assert_eq!(normalize_ray(&[int(0), int(3)]), vec![int(0), int(1)]);
    }

    #[test]
    fn primitive_integer_vectors() {
        assert_eq!(primitive_integer(&[rat(1, 3), rat(-1, 6)]), vec![int(2), int(-1)]);
        assert_eq!(primitive_integer(&[int(4), int(6)]), vec![int(2), int(3)]);
    }
}
