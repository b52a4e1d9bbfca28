//! Scalar backends: exact rationals and binary64.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

pub type Rational = BigRational;

/// Field operations shared by the rational and float backends.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const EXACT: bool;
    const NAME: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn ratio(p: i64, q: i64) -> Self {
        Self::from_i64(p) / Self::from_i64(q)
    }
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }
    /// Small random value: a rational with bounded numerator and denominator.
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let p: i64 = rng.gen_range(-9..=9);
        let q: i64 = rng.gen_range(1..=5);
        Self::ratio(p, q)
    }
    /// `|self - other| <= tol`; exact equality for exact backends.
    fn close(&self, other: &Self, tol: f64) -> bool {
        if Self::EXACT {
            self == other
        } else {
            (self.to_f64() - other.to_f64()).abs() <= tol
        }
    }
    fn to_json(&self) -> serde_json::Value;
}

impl Scalar for Rational {
    const EXACT: bool = true;
    const NAME: &'static str = "rational";

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn ratio(p: i64, q: i64) -> Self {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        self.to_f64_lossy()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn abs_f64(&self) -> f64 {
        self.abs().to_f64_lossy()
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format_rational(self))
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const NAME: &'static str = "f64";

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_rational(r: &Rational) -> Self {
        r.to_f64_lossy()
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.gen_range(-2.0..2.0)
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::json!(*self)
    }
}

trait LossyF64 {
    fn to_f64_lossy(&self) -> f64;
}

impl LossyF64 for BigRational {
    fn to_f64_lossy(&self) -> f64 {
        if let (Some(n), Some(d)) = (self.numer().to_f64(), self.denom().to_f64()) {
            if n.is_finite() && d.is_finite() && d != 0.0 {
                return n / d;
            }
        }
        // Very large numerator/denominator: scale down by a common power of two.
        let shift = self.denom().bits().max(self.numer().bits()).saturating_sub(900);
        let n = (self.numer() >> shift).to_f64().unwrap_or(0.0);
        let d = (self.denom() >> shift).to_f64().unwrap_or(1.0);
        n / d
    }
}

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::ratio(p, q)
}

pub fn rint(v: i64) -> Rational {
    Rational::from_i64(v)
}

/// `"p/q"`, or `"p"` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("cannot parse rational from {0:?}")]
pub struct ParseRationalError(pub String);

pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| err())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| err())?;
            if q.is_zero() {
                return Err(err());
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(
            BigInt::from_str(s).map_err(|_| err())?,
        )),
    }
}

/// Reads a rational from a JSON string (`"p/q"`) or integer.
pub fn rational_from_json(v: &serde_json::Value) -> Result<Rational, ParseRationalError> {
    match v {
        serde_json::Value::String(s) => parse_rational(s),
        serde_json::Value::Number(n) if n.is_i64() => Ok(rint(n.as_i64().unwrap())),
        other => Err(ParseRationalError(other.to_string())),
    }
}
