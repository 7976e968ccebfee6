//! Exact rational helpers: the `Q` alias, parsing/printing in `p/q` form,
//! serde adapters and a closed rational interval.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Q = num_rational::BigRational;

pub fn q(numer: i64, denom: i64) -> Q {
    Q::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn qi(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn qu(v: u64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn pow_q(base: &Q, exp: u32) -> Q {
    num_traits::pow(base.clone(), exp as usize)
}

/// Always `p/q`, including integers (`3/1`), so the format is uniform.
pub fn to_pq(v: &Q) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Argument(format!("cannot parse rational `{s}`"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Q::new(n, d))
    } else if let Ok(i) = s.parse::<BigInt>() {
        Ok(Q::from_integer(i))
    } else {
        // decimal literal such as 0.25
        let f: f64 = s.parse().map_err(|_| bad())?;
        Q::from_float(f).ok_or_else(bad)
    }
}

pub fn to_f64(v: &Q) -> f64 {
    v.to_f64().unwrap_or_else(|| {
        // very large numerators/denominators: scale down through the bit lengths
        let n = v.numer();
        let d = v.denom();
        let shift = n.bits().max(d.bits()).saturating_sub(900) as u32;
        let n = n >> shift;
        let d = d >> shift;
        n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
    })
}

/// Exact square root when `v` is the square of a rational.
pub fn exact_sqrt(v: &Q) -> Option<Q> {
    if v.is_negative() {
        return None;
    }
    let n = v.numer().sqrt();
    let d = v.denom().sqrt();
    if &(&n * &n) == v.numer() && &(&d * &d) == v.denom() {
        Some(Q::new(n, d))
    } else {
        None
    }
}

/// Rational lower bound for `exp(-x)`, `x >= 0` (cubic Taylor truncation, clamped at 0).
pub fn exp_neg_lower(x: &Q) -> Q {
    let x2 = x * x;
    let x3 = &x2 * x;
    let v = Q::one() - x + x2 / qi(2) - x3 / qi(6);
    if v.is_negative() {
        Q::zero()
    } else {
        v
    }
}

/// Rational upper bound for `exp(-x)`, `x >= 0` (quadratic Taylor truncation, capped at 1).
pub fn exp_neg_upper(x: &Q) -> Q {
    let v = Q::one() - x + x * x / qi(2);
    if v > Q::one() {
        Q::one()
    } else {
        v
    }
}

/// Closed interval `[lo, hi]` of rationals enclosing an exact quantity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalQ {
    #[serde(with = "qser")]
    pub lo: Q,
    #[serde(with = "qser")]
    pub hi: Q,
}

impl IntervalQ {
    pub fn new(lo: Q, hi: Q) -> Self {
        debug_assert!(lo <= hi, "interval endpoints out of order");
        IntervalQ { lo, hi }
    }

    pub fn point(v: Q) -> Self {
        IntervalQ { lo: v.clone(), hi: v }
    }

    pub fn width(&self) -> Q {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Q {
        (&self.lo + &self.hi) / qi(2)
    }

    pub fn contains(&self, v: &Q) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn encloses(&self, other: &IntervalQ) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}

impl fmt::Display for IntervalQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", to_pq(&self.lo), to_pq(&self.hi))
    }
}

/// Serde adapter writing a rational as a `"p/q"` string.
pub mod qser {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&to_pq(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(serde::de::Error::custom)
    }
}

pub mod qvec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(to_pq).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter()
            .map(|s| parse_q(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub mod qopt {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref().map(to_pq).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Q>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| parse_q(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}
