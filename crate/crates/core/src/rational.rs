//! Exact rational helpers shared by every module.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{input}` as an exact rational")]
pub struct ParseRationalError {
    pub input: String,
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"3"`, `"-0.25"`, `"1.5e-3"` or `"7/3"` into an exact rational.
pub fn parse(input: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError {
        input: input.to_string(),
    };
    let s = input.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let all_digits = format!("{whole}{frac}");
    let numer: BigInt = if all_digits.is_empty() {
        BigInt::zero()
    } else {
        all_digits.parse().map_err(|_| err())?
    };
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Parses a JSON number or string into an exact rational.
///
/// Numbers go through their shortest decimal rendering so `0.1` becomes exactly 1/10.
pub fn from_json(value: &serde_json::Value) -> Result<Rational, ParseRationalError> {
    match value {
        serde_json::Value::Number(n) => parse(&n.to_string()),
        serde_json::Value::String(s) => parse(s),
        other => Err(ParseRationalError {
            input: other.to_string(),
        }),
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn is_integer(r: &Rational) -> bool {
    r.denom().is_one()
}

pub fn to_i64(r: &Rational) -> Option<i64> {
    if is_integer(r) {
        r.numer().to_i64()
    } else {
        None
    }
}

pub fn floor_i64(r: &Rational) -> Option<i64> {
    r.floor().numer().to_i64()
}

pub fn ceil_i64(r: &Rational) -> Option<i64> {
    r.ceil().numer().to_i64()
}

/// Converts a float into a nearby simple rational.
///
/// Near-integers snap to the integer; otherwise the best continued-fraction
/// approximation with denominator at most `max_denominator` is used when it lies
/// within `tolerance`, falling back to the exact binary value of the float.
pub fn rationalize(value: f64, max_denominator: i64, tolerance: f64) -> Rational {
    if !value.is_finite() {
        return Rational::zero();
    }
    let rounded = value.round();
    if (value - rounded).abs() <= tolerance && rounded.abs() < 9.0e15 {
        return int(rounded as i64);
    }
    if let Some(r) = continued_fraction(value, max_denominator) {
        if (to_f64(&r) - value).abs() <= tolerance * value.abs().max(1.0) {
            return r;
        }
    }
    Rational::from_float(value).unwrap_or_else(Rational::zero)
}

fn continued_fraction(value: f64, max_denominator: i64) -> Option<Rational> {
    let negative = value < 0.0;
    let mut x = value.abs();
    // convergents h/k
    let (mut h_prev, mut h) = (BigInt::one(), BigInt::from(x.floor() as i64));
    let (mut k_prev, mut k) = (BigInt::zero(), BigInt::one());
    let limit = BigInt::from(max_denominator);
    let mut frac = x - x.floor();
    for _ in 0..64 {
        if frac.abs() < 1e-15 {
            break;
        }
        x = 1.0 / frac;
        let a = x.floor();
        if a > 1e12 {
            break;
        }
        let a_big = BigInt::from(a as i64);
        let h_next = &a_big * &h + &h_prev;
        let k_next = &a_big * &k + &k_prev;
        if k_next > limit {
            break;
        }
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
        frac = x - a;
    }
    let r = Rational::new(h, k);
    Some(if negative { -r } else { r })
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// `p/q` or `p` rendering used in reports and documents.
pub struct Display<'a>(pub &'a Rational);

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if is_integer(self.0) {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

pub fn to_string(r: &Rational) -> String {
    Display(r).to_string()
}

/// Canonical decimal rendering: exact when the expansion terminates, otherwise
/// 17 significant digits.
pub fn to_decimal(r: &Rational) -> String {
    if is_integer(r) {
        return r.numer().to_string();
    }
    let mut d = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0u32;
    let mut fives = 0u32;
    while d.is_even() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if d.is_one() {
        let places = twos.max(fives) as usize;
        let scaled = r * Rational::from_integer(num_traits::pow(BigInt::from(10), places));
        let n = scaled.to_integer();
        let negative = n.is_negative();
        let digits = n.abs().to_string();
        let digits = format!("{digits:0>width$}", width = places + 1);
        let (whole, frac) = digits.split_at(digits.len() - places);
        let frac = frac.trim_end_matches('0');
        let sign = if negative { "-" } else { "" };
        if frac.is_empty() {
            format!("{sign}{whole}")
        } else {
            format!("{sign}{whole}.{frac}")
        }
    } else {
        format!("{:.17e}", to_f64(r))
            .parse::<f64>()
            .map(|v| format!("{v:?}"))
            .unwrap_or_else(|_| to_f64(r).to_string())
    }
}
