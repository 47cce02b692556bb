//! Exact rationals and their text and JSON forms.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Rational = num_rational::BigRational;

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn integer(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"0.01"`.
pub fn parse(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("not a rational: {text:?}"));
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches('-'), frac);
        let num: BigInt = digits.parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let value = Rational::new(num, den);
        return Ok(if negative { -value } else { value });
    }
    let num: BigInt = text.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(num))
}

/// Nearest `f64`, also for values whose numerator or denominator overflow.
pub fn to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    let bits_n = r.numer().bits() as i64;
    let bits_d = r.denom().bits() as i64;
    let shift = bits_n - bits_d;
    // scale into range, divide, rescale
    let scaled = if shift > 0 {
        Rational::new(r.numer().abs(), r.denom() << (shift as usize))
    } else {
        Rational::new(r.numer().abs() << ((-shift) as usize), r.denom().clone())
    };
    let mant = scaled.numer().to_f64().unwrap_or(f64::MAX) / scaled.denom().to_f64().unwrap_or(f64::MAX);
    sign * mant * (shift as f64).exp2()
}

/// `log2 |r|` without materializing `r` as a float.
pub fn log2_abs(r: &Rational) -> f64 {
    let shift = r.numer().bits() as i64 - r.denom().bits() as i64;
    let scaled = if shift > 0 {
        Rational::new(r.numer().abs(), r.denom() << (shift as usize))
    } else {
        Rational::new(r.numer().abs() << ((-shift) as usize), r.denom().clone())
    };
    to_f64(&scaled).log2() + shift as f64
}

/// JSON form `{"num": "...", "den": "..."}` with decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalJson {
    pub num: String,
    pub den: String,
}

impl From<&Rational> for RationalJson {
    fn from(r: &Rational) -> Self {
        Self { num: r.numer().to_string(), den: r.denom().to_string() }
    }
}

impl TryFrom<&RationalJson> for Rational {
    type Error = Error;
    fn try_from(j: &RationalJson) -> Result<Rational> {
        parse(&format!("{}/{}", j.num, j.den))
    }
}
