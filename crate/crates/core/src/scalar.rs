//! Exact rational scalars and their text encodings.
//!
//! Every coordinate, length and area in the crate is a [`Rational`]. Values
//! cross process boundaries as `"num/den"` strings; the only lossy rendering
//! is [`to_decimal`], used for SVG output and human-readable tables.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::Serializer;

use crate::error::Error;

/// Arbitrary-precision rational number, always kept in lowest terms with a
/// positive denominator.
pub type Rational = num_rational::BigRational;

/// Builds `num/den` from machine integers. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// `2^-exp` as an exact rational.
pub fn pow2_inv(exp: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << exp)
}

/// Parses `"num/den"` or a bare integer. Decimal points and exponents are
/// rejected: there is no floating-point input anywhere.
pub fn parse_rational(text: &str) -> Result<Rational, Error> {
    let bad = || Error::MalformedRational(text.to_string());
    let trimmed = text.trim();
    let (num, den) = match trimmed.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (trimmed, "1"),
    };
    let is_int = |s: &str| {
        let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !is_int(num) || !is_int(den) {
        return Err(bad());
    }
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Canonical `"num/den"` encoding. Integers keep the `/1` suffix so every
/// value has the same shape on the wire.
pub fn format_rational(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Wrapper whose `Display` is the canonical `"num/den"` form.
pub struct Exact<'a>(pub &'a Rational);

impl fmt::Display for Exact<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

/// Renders `value` as a plain decimal string rounded to `sig_digits`
/// significant digits (round half to even). Trailing zeros are trimmed and
/// no exponent notation is used, so the output is locale independent.
pub fn to_decimal(value: &Rational, sig_digits: u32) -> String {
    assert!(sig_digits > 0, "need at least one significant digit");
    if value.is_zero() {
        return "0".to_string();
    }
    let negative = value.is_negative();
    let magnitude = value.abs();
    let ten = BigInt::from(10);

    // Find e with 10^e <= |v| < 10^(e+1).
    let mut exp =
        magnitude.numer().to_string().len() as i64 - magnitude.denom().to_string().len() as i64;
    loop {
        let lower = pow10(exp);
        if magnitude < lower {
            exp -= 1;
            continue;
        }
        if magnitude >= pow10(exp + 1) {
            exp += 1;
            continue;
        }
        break;
    }

    let shift = sig_digits as i64 - 1 - exp;
    let scaled = &magnitude * pow10(shift);
    let mut digits = round_half_even(&scaled);
    let mut shift = shift;
    if digits == ten.pow(sig_digits) {
        digits /= &ten;
        shift -= 1;
    }

    let mut text = digits.to_string();
    if shift > 0 {
        let shift = shift as usize;
        if text.len() <= shift {
            text = format!("{}{}", "0".repeat(shift - text.len() + 1), text);
        }
        let point = text.len() - shift;
        text.insert(point, '.');
        let trimmed = text.trim_end_matches('0').trim_end_matches('.');
        text = trimmed.to_string();
    } else {
        text.push_str(&"0".repeat((-shift) as usize));
    }
    if negative {
        text.insert(0, '-');
    }
    text
}

fn pow10(exp: i64) -> Rational {
    let p = BigInt::from(10).pow(exp.unsigned_abs() as u32);
    if exp >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

fn round_half_even(value: &Rational) -> BigInt {
    let (floor, rem) = value.numer().div_mod_floor(value.denom());
    let twice: BigInt = rem * 2;
    match twice.cmp(value.denom()) {
        Ordering::Less => floor,
        Ordering::Greater => floor + 1,
        Ordering::Equal => {
            if floor.is_even() {
                floor
            } else {
                floor + 1
            }
        }
    }
}

/// True iff `value` is `k / 2^depth` for some integer `k`.
pub fn is_dyadic_at(value: &Rational, depth: usize) -> bool {
    let scaled = value * Rational::from_integer(BigInt::one() << depth);
    scaled.is_integer()
}

/// `floor(value * 2^depth)` as a `usize`. Callers guarantee `0 <= value <= 1`
/// and a depth small enough for the index to fit.
pub fn dyadic_floor(value: &Rational, depth: usize) -> usize {
    let scaled = value * Rational::from_integer(BigInt::one() << depth);
    let floor = scaled.floor().to_integer();
    let (sign, digits) = floor.to_u64_digits();
    match (sign, digits.as_slice()) {
        (Sign::NoSign, _) | (_, []) => 0,
        (Sign::Plus, [d]) => *d as usize,
        _ => panic!("dyadic index out of machine range"),
    }
}

/// Serde adapters that encode a [`Rational`] as a `"num/den"` string.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        struct RationalVisitor;
        impl Visitor<'_> for RationalVisitor {
            type Value = Rational;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational encoded as \"num/den\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
                parse_rational(v).map_err(E::custom)
            }
        }
        d.deserialize_str(RationalVisitor)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;
        use serde::Deserialize;

        pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(values.len()))?;
            for v in values {
                seq.serialize_element(&format_rational(v))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let raw = Vec::<String>::deserialize(d)?;
            raw.iter()
                .map(|s| parse_rational(s).map_err(de::Error::custom))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("1/2").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-6/4").unwrap(), ratio(-3, 2));
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational(" 2/-4 ").unwrap(), ratio(-1, 2));
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["", "1/0", "0.5", "1e3", "a/b", "1//2", "/2", "1/"] {
            assert!(parse_rational(bad).is_err(), "{bad:?} accepted");
        }
    }

    #[test]
    fn canonical_encoding_keeps_denominator() {
        assert_eq!(format_rational(&int(1)), "1/1");
        assert_eq!(format_rational(&ratio(-10, 4)), "-5/2");
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(to_decimal(&ratio(1, 3), 12), "0.333333333333");
        assert_eq!(to_decimal(&ratio(2, 3), 12), "0.666666666667");
        assert_eq!(to_decimal(&ratio(-9, 16), 12), "-0.5625");
        assert_eq!(to_decimal(&int(0), 12), "0");
        assert_eq!(to_decimal(&int(1200), 2), "1200");
        assert_eq!(to_decimal(&ratio(1, 1000), 12), "0.001");
        assert_eq!(to_decimal(&ratio(999_999, 1_000_000), 3), "1");
    }

    #[test]
    fn decimal_rounding_is_half_even() {
        // 0.125 -> 0.12, 0.375 -> 0.38 at two significant digits
        assert_eq!(to_decimal(&ratio(1, 8), 2), "0.12");
        assert_eq!(to_decimal(&ratio(3, 8), 2), "0.38");
        assert_eq!(to_decimal(&ratio(25, 1), 1), "20");
        assert_eq!(to_decimal(&ratio(35, 1), 1), "40");
    }

    #[test]
    fn dyadic_helpers() {
        assert!(is_dyadic_at(&ratio(3, 8), 3));
        assert!(!is_dyadic_at(&ratio(3, 8), 2));
        assert!(!is_dyadic_at(&ratio(1, 3), 20));
        assert_eq!(dyadic_floor(&ratio(1, 3), 4), 5);
        assert_eq!(dyadic_floor(&int(1), 4), 16);
    }

    proptest! {
        #[test]
        fn text_encoding_round_trips(n in -1_000_000i64..1_000_000, d in 1i64..1_000_000) {
            let v = ratio(n, d);
            prop_assert_eq!(parse_rational(&format_rational(&v)).unwrap(), v);
        }

        #[test]
        fn decimal_is_within_half_ulp(n in 1i64..10_000_000, d in 1i64..10_000_000) {
            let v = ratio(n, d);
            let text = to_decimal(&v, 12);
            // parse the decimal back exactly
            let (int_part, frac) = text.split_once('.').unwrap_or((&text, ""));
            let scaled: BigInt = format!("{int_part}{frac}").parse().unwrap();
            let back = Rational::new(scaled, BigInt::from(10).pow(frac.len() as u32));
            let err = (back - &v).abs();
            // 12 significant digits: relative error at most 5e-12
            prop_assert!(err <= v * ratio(5, 1_000_000_000_000));
        }
    }
}
