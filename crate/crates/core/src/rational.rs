//! Exact rational scalars used for all instance data.
//!
//! Instance values, thresholds and costs are stored as `Ratio<i128>`. Floats
//! are accepted at the I/O boundary only and converted through their shortest
//! decimal representation, rounded to [`MAX_DECIMALS`] fractional digits.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{AvaError, Result};

/// Exact scalar for instance data.
pub type Rational = Ratio<i128>;

/// Fractional digits kept when converting a float to a [`Rational`].
pub const MAX_DECIMALS: u32 = 9;

/// Shorthand for `n / d`. Panics on a zero denominator.
pub fn q(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

pub fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn to_big(r: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

pub fn big_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Converts a finite float through its shortest round-trip decimal string.
pub fn from_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(AvaError::Validation(format!("non-finite number {x}")));
    }
    parse_decimal(&format!("{x}"))
}

/// Parses `"12"`, `"-0.125"` or `"7/3"`.
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().map_err(|_| AvaError::Validation(format!("bad rational numerator in {s:?}")))?;
        let d: i128 =
            d.trim().parse().map_err(|_| AvaError::Validation(format!("bad rational denominator in {s:?}")))?;
        if d == 0 {
            return Err(AvaError::Validation(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Result<Rational> {
    let bad = || AvaError::Validation(format!("bad decimal {s:?}"));
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let whole: i128 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| bad())? };
    let mut digits: Vec<u8> = frac.bytes().map(|b| b - b'0').collect();
    let mut round_up = false;
    if digits.len() > MAX_DECIMALS as usize {
        round_up = digits[MAX_DECIMALS as usize] >= 5;
        digits.truncate(MAX_DECIMALS as usize);
    }
    let mut num: i128 = 0;
    for d in &digits {
        num = num * 10 + i128::from(*d);
    }
    if round_up {
        num += 1;
    }
    let den = 10i128.pow(digits.len() as u32);
    let mut r = Rational::from_integer(whole) + Rational::new(num, den);
    if neg {
        r = -r;
    }
    Ok(r)
}

/// True when the reduced denominator has only factors 2 and 5.
pub fn is_terminating(r: &Rational) -> bool {
    let mut d = *r.denom();
    while d % 2 == 0 {
        d /= 2;
    }
    while d % 5 == 0 {
        d /= 5;
    }
    d == 1
}

/// Human-readable exact form: a decimal when terminating, else `a/b`.
pub fn display(r: &Rational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    if is_terminating(r) {
        let mut digits = 0u32;
        let mut d = *r.denom();
        while d != 1 {
            if d % 10 == 0 {
                d /= 10;
            } else if d % 2 == 0 {
                d /= 2;
            } else {
                d /= 5;
            }
            digits += 1;
        }
        let scaled = r * Rational::from_integer(10i128.pow(digits));
        let n = scaled.to_integer();
        let sign = if n < 0 { "-" } else { "" };
        let n = n.abs();
        let p = 10i128.pow(digits);
        return format!("{sign}{}.{:0width$}", n / p, n % p, width = digits as usize);
    }
    format!("{}/{}", r.numer(), r.denom())
}

/// Best rational approximation with denominator at most `max_den`
/// (continued-fraction convergents and semiconvergents).
pub fn limit_denominator(x: f64, max_den: i64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let exact = BigRational::from_float(x)?;
    if exact.denom() <= &BigInt::from(max_den) {
        return Some(exact);
    }
    let max_den = BigInt::from(max_den);
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let mut n = exact.numer().clone();
    let mut d = exact.denom().clone();
    loop {
        let a = num_integer::Integer::div_floor(&n, &d);
        let q2 = &q0 + &a * &q1;
        if q2 > max_den {
            break;
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let rem = &n - &a * &d;
        n = std::mem::replace(&mut d, rem);
        if d.is_zero() {
            break;
        }
    }
    if q1.is_zero() {
        return None;
    }
    let k = num_integer::Integer::div_floor(&(&max_den - &q0), &q1);
    let bound1 = BigRational::new(&p0 + &k * &p1, &q0 + &k * &q1);
    let bound2 = BigRational::new(p1, q1);
    if (&bound2 - &exact).abs() <= (&bound1 - &exact).abs() {
        Some(bound2)
    } else {
        Some(bound1)
    }
}
