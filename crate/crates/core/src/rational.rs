//! Exact rational numbers and the string format used in every JSON/CSV
//! artifact (`"p/q"`, or a plain integer, or a finite decimal on input).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

/// `num / den` as an exact rational. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^k` for any integer `k`.
pub fn pow2(k: i64) -> Rational {
    let mag = BigInt::one() << (k.unsigned_abs() as usize);
    if k >= 0 {
        Rational::from_integer(mag)
    } else {
        Rational::new(BigInt::one(), mag)
    }
}

pub fn half(x: &Rational) -> Rational {
    x / int(2)
}

pub fn mid(a: &Rational, b: &Rational) -> Rational {
    (a + b) / int(2)
}

/// Total order on reduced rationals by cross-multiplication.
#[inline]
pub fn cmp_fast(a: &Rational, b: &Rational) -> std::cmp::Ordering {
    if a.denom() == b.denom() {
        return a.numer().cmp(b.numer());
    }
    (a.numer() * b.denom()).cmp(&(b.numer() * a.denom()))
}

#[inline]
pub fn eq_fast(a: &Rational, b: &Rational) -> bool {
    a.numer() == b.numer() && a.denom() == b.denom()
}

#[inline]
pub fn lt(a: &Rational, b: &Rational) -> bool {
    cmp_fast(a, b).is_lt()
}

#[inline]
pub fn le(a: &Rational, b: &Rational) -> bool {
    cmp_fast(a, b).is_le()
}

/// Sorts and removes duplicates.
pub fn sort_dedup(v: &mut Vec<Rational>) {
    v.sort_unstable_by(cmp_fast);
    v.dedup_by(|a, b| eq_fast(a, b));
}

pub fn min_r<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn max_r<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if a >= b {
        a
    } else {
        b
    }
}

/// Parses `"p/q"`, `"p"`, or a finite decimal such as `"-0.125"` / `"1e-3"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not an exact rational: {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = t[i + 1..].parse().map_err(|_| bad())?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = digits.split_once('.').unwrap_or((digits, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all = format!("{ip}{fp}");
    let n: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| bad())? };
    let scale = exp - fp.len() as i64;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        Rational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(n, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Canonical text form: `"p/q"` in lowest terms, or `"p"` for integers.
pub fn format_rational(x: &Rational) -> String {
    x.to_string()
}

/// Decimal rendering with `digits` fractional digits (truncated toward zero).
/// Only for plotting columns; never parsed back.
pub fn to_decimal(x: &Rational, digits: usize) -> String {
    let neg = x.is_negative();
    let a = x.abs();
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = (a.numer() * &scale).div_floor(a.denom());
    let (ip, fp) = scaled.div_rem(&scale);
    let sign = if neg && !scaled.is_zero() { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{ip}")
    } else {
        format!("{sign}{ip}.{:0>width$}", fp.to_string(), width = digits)
    }
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational from an `f64` (every finite double is a dyadic rational).
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// `floor(log2(x))` for `x > 0`.
pub fn floor_log2(x: &Rational) -> i64 {
    assert!(x.is_positive(), "floor_log2 of a non-positive rational");
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let mut k = nb - db;
    while pow2(k) > *x {
        k -= 1;
    }
    while pow2(k + 1) <= *x {
        k += 1;
    }
    k
}

pub(crate) mod serde_str {
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod serde_str_vec {
    use super::{format_rational, parse_rational, Rational};
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&format_rational(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub(crate) mod serde_str_opt {
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_some(&format_rational(x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
        let v = Option::<String>::deserialize(d)?;
        v.map(|s| parse_rational(&s).map_err(serde::de::Error::custom)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-7").unwrap(), int(-7));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational("1e-3").unwrap(), rat(1, 1000));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn formats_lowest_terms() {
        assert_eq!(format_rational(&rat(2, 4)), "1/2");
        assert_eq!(format_rational(&rat(-4, 2)), "-2");
        assert_eq!(format_rational(&rat(3, -9)), "-1/3");
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(to_decimal(&rat(1, 3), 4), "0.3333");
        assert_eq!(to_decimal(&rat(-5, 4), 2), "-1.25");
        assert_eq!(to_decimal(&int(2), 0), "2");
    }

    #[test]
    fn powers_and_logs() {
        assert_eq!(pow2(-3), rat(1, 8));
        assert_eq!(pow2(4), int(16));
        assert_eq!(floor_log2(&rat(1, 8)), -3);
        assert_eq!(floor_log2(&rat(3, 16)), -3);
        assert_eq!(floor_log2(&int(5)), 2);
        assert_eq!(floor_log2(&rat(1, 10)), -4);
    }
}
