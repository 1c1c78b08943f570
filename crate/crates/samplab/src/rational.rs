//! Exact rational helpers shared by every module: powers of two, the
//! `"num/den"` wire format and rational exponents `k` for thresholds `2^-k`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

/// `2^e` for any integer `e`.
pub fn pow2(e: i64) -> Q {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Q::from_integer(p)
    } else {
        Q::new_raw(BigInt::one(), p)
    }
}

/// `num / 2^log_den`, reduced.
pub fn dyadic(num: u64, log_den: u32) -> Q {
    // reduce by shifting instead of a gcd
    let z = if num == 0 { log_den } else { num.trailing_zeros().min(log_den) };
    let num = if num == 0 { 0 } else { num >> z };
    Q::new_raw(BigInt::from(num), BigInt::one() << (log_den - z))
}

pub fn format_q(v: &Q) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = BigInt::from_str(n).map_err(|_| invalid(format!("bad rational numerator in {s:?}")))?;
    let d = BigInt::from_str(d).map_err(|_| invalid(format!("bad rational denominator in {s:?}")))?;
    if d.is_zero() {
        return Err(invalid(format!("zero denominator in {s:?}")));
    }
    Ok(Q::new(n, d))
}

/// Exact `floor(log2(v))` for `v > 0`.
pub fn floor_log2(v: &Q) -> i64 {
    assert!(v.is_positive());
    let n = v.numer().magnitude();
    let d = v.denom().magnitude();
    let mut e = n.bits() as i64 - d.bits() as i64;
    // 2^e <= v < 2^(e+1) after at most one correction step each way.
    loop {
        if pow2(e) > *v {
            e -= 1;
        } else if pow2(e + 1) <= *v {
            e += 1;
        } else {
            return e;
        }
    }
}

/// Integer bracket `lo <= log2(v) <= hi` with `lo == hi` iff `v` is a power of two.
pub fn log2_bounds(v: &Q) -> (i64, i64) {
    let lo = floor_log2(v);
    if pow2(lo) == *v {
        (lo, lo)
    } else {
        (lo, lo + 1)
    }
}

/// A rational exponent `k`, used through the threshold `2^-k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Exponent(pub Q);

impl Exponent {
    pub fn int(k: i64) -> Self {
        Exponent(qi(k))
    }

    pub fn as_integer(&self) -> Option<i64> {
        if self.0.is_integer() {
            self.0.to_integer().to_i64()
        } else {
            None
        }
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_q(s).map(Exponent)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::Number(n) => n
                .as_i64()
                .map(Exponent::int)
                .ok_or_else(|| serde::de::Error::custom("exponent must be an integer or a \"p/q\" string")),
            serde_json::Value::String(s) => parse_q(&s).map(Exponent).map_err(serde::de::Error::custom),
            _ => Err(serde::de::Error::custom("exponent must be an integer or a \"p/q\" string")),
        }
    }
}

/// `2^-x` for rational `x`, exact when `x` is an integer. Otherwise a dyadic
/// approximation with 64 fractional bits, rounded down or up as requested.
/// The flag reports whether the value is exact.
pub fn pow2_neg(x: &Q, round_up: bool) -> (Q, bool) {
    if x.is_integer() {
        let e = x.to_integer().to_i64().expect("exponent out of range");
        return (pow2(-e), true);
    }
    // floor(2^(64 - p/q)) = floor((2^(64q - p))^(1/q)).
    let p = x.numer().clone();
    let qd = x.denom().clone();
    let e = BigInt::from(64) * &qd - &p;
    let qd_u = qd.to_u32().expect("exponent denominator too large");
    let floor = if e.is_negative() {
        BigUint::zero()
    } else {
        let e = e.to_u64().expect("exponent too large");
        (BigUint::one() << e).nth_root(qd_u)
    };
    let num = if round_up { floor + 1u32 } else { floor };
    (Q::new(BigInt::from(num), BigInt::one() << 64u32), false)
}

pub fn to_f64(v: &Q) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

pub fn ceil_div_u(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Serde adapter writing rationals as canonical `"num/den"` strings.
pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_q(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::String(s) => parse_q(&s).map_err(serde::de::Error::custom),
            serde_json::Value::Number(n) if n.is_i64() => Ok(qi(n.as_i64().unwrap())),
            _ => Err(serde::de::Error::custom("expected a \"num/den\" string")),
        }
    }
}

pub mod serde_q_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&format_q(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        v.iter().map(|s| parse_q(s).map_err(serde::de::Error::custom)).collect()
    }
}

pub mod serde_q_opt {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&format_q(x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Q>, D::Error> {
        let v: Option<String> = Option::deserialize(d)?;
        v.map(|s| parse_q(&s).map_err(serde::de::Error::custom)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_format() {
        for s in ["3/4", "0/1", "7/1", "-5/12"] {
            assert_eq!(format_q(&parse_q(s).unwrap()), s);
        }
        assert_eq!(parse_q("6/8").unwrap(), q(3, 4));
        assert!(parse_q("1/0").is_err());
    }

    #[test]
    fn log2_brackets() {
        assert_eq!(log2_bounds(&q(1, 8)), (-3, -3));
        assert_eq!(log2_bounds(&q(3, 8)), (-2, -1));
        assert_eq!(log2_bounds(&qi(5)), (2, 3));
    }

    #[test]
    fn pow2_neg_brackets_irrational_values() {
        let half = q(1, 2);
        let (lo, exact) = pow2_neg(&half, false);
        let (hi, _) = pow2_neg(&half, true);
        assert!(!exact);
        // lo <= 2^-1/2 < hi, i.e. lo^2 <= 1/2 < hi^2
        assert!(&lo * &lo <= half && &hi * &hi > half);
        assert_eq!(&hi - &lo, pow2(-64));
        assert_eq!(pow2_neg(&qi(3), false), (q(1, 8), true));
    }
}
