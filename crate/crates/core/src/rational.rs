//! Exact rational arithmetic.
//!
//! Every cost, potential and identity in this crate is computed over
//! arbitrary-precision rationals so that equalities can be checked with `==`.
//! On the wire a rational is either a JSON integer or a `"num/den"` string.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// `num / den` as an exact rational. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn half() -> Rational {
    ratio(1, 2)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational from a finite `f64` (every finite double is dyadic).
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Parses `"7"`, `"-3"`, `"1/2"` (whitespace around the parts is ignored).
pub fn parse_rational(text: &str) -> Result<Rational> {
    let bad = || Error::BadRational(text.to_string());
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// `"n"` for integers, `"n/d"` otherwise (always in lowest terms).
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// JSON form: a plain number for integers that fit in `i64`, a string otherwise.
pub fn to_json(r: &Rational) -> serde_json::Value {
    if r.is_integer() {
        if let Some(n) = r.numer().to_i64() {
            return serde_json::Value::from(n);
        }
    }
    serde_json::Value::String(format_rational(r))
}

/// Untagged wire form accepted when reading rationals.
#[derive(Deserialize)]
#[serde(untagged)]
pub(crate) enum RationalRepr {
    Int(i64),
    Text(String),
    Float(f64),
}

impl RationalRepr {
    pub(crate) fn into_rational(self) -> Result<Rational> {
        match self {
            RationalRepr::Int(n) => Ok(int(n)),
            RationalRepr::Text(s) => parse_rational(&s),
            // Only integral floats are accepted; anything else is not exact.
            RationalRepr::Float(x) if x.fract() == 0.0 && x.is_finite() => {
                from_f64(x).ok_or_else(|| Error::BadRational(x.to_string()))
            }
            RationalRepr::Float(x) => Err(Error::BadRational(x.to_string())),
        }
    }
}

/// Serde adapter for a single `Rational` field.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_json(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        RationalRepr::deserialize(d)?
            .into_rational()
            .map_err(de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(to_json).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        Vec::<RationalRepr>::deserialize(d)?
            .into_iter()
            .map(|r| r.into_rational().map_err(de::Error::custom))
            .collect()
    }
}

/// Serde adapter for `Option<Rational>`.
pub mod serde_opt_rational {
    use super::*;

    pub fn serialize<S: Serializer>(
        r: &Option<Rational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        r.as_ref().map(to_json).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Rational>, D::Error> {
        Option::<RationalRepr>::deserialize(d)?
            .map(|r| r.into_rational().map_err(de::Error::custom))
            .transpose()
    }
}

pub(crate) fn is_positive(r: &Rational) -> bool {
    r.is_positive()
}
