//! Exact rational helpers: parsing, formatting, rounding, bit sizes and
//! rational lower bounds on n-th roots.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use std::fmt;
use std::str::FromStr;

pub type Rat = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {literal:?}: {reason}")]
pub struct ParseRatError {
    pub literal: String,
    pub reason: &'static str,
}

fn bad(literal: &str, reason: &'static str) -> ParseRatError {
    ParseRatError {
        literal: literal.to_string(),
        reason,
    }
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `n/d` as an exact rational. Panics on `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn from_bigint(n: BigInt) -> Rat {
    Rat::from_integer(n)
}

/// Parses `"p/q"`, integers and decimal literals (with optional exponent)
/// into an exact rational. Decimals are read as exact fractions.
pub fn parse(s: &str) -> Result<Rat, ParseRatError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(bad(s, "empty"));
    }
    if let Some((p, q)) = t.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad(s, "numerator is not an integer"))?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad(s, "denominator is not an integer"))?;
        if q.is_zero() {
            return Err(bad(s, "zero denominator"));
        }
        return Ok(Rat::new(p, q));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = t[i + 1..].parse().map_err(|_| bad(s, "bad exponent"))?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = body.split_once('.').unwrap_or((body, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad(s, "no digits"));
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad(s, "unexpected character"));
    }
    let digits = format!("{ip}{fp}");
    let mut num =
        BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad(s, "unexpected character"))?;
    if neg {
        num = -num;
    }
    let scale = exp - fp.len() as i64;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Rat::from_integer(num * Pow::pow(&ten, scale as u64))
    } else {
        Rat::new(num, Pow::pow(&ten, (-scale) as u64))
    })
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn format(x: &Rat) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Display wrapper printing the canonical form.
pub struct Show<'a>(pub &'a Rat);

impl fmt::Display for Show<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format(self.0))
    }
}

pub fn floor(x: &Rat) -> BigInt {
    x.numer().div_floor(x.denom())
}

pub fn ceil(x: &Rat) -> BigInt {
    -((-x.numer()).div_floor(x.denom()))
}

/// Bit size of numerator plus bit size of denominator.
pub fn bit_size(x: &Rat) -> u64 {
    x.numer().bits().max(1) + x.denom().bits()
}

pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Huge operands: scale down before converting.
        let nb = x.numer().bits() as i64;
        let db = x.denom().bits() as i64;
        let shift = (nb - db).clamp(-1000, 1000);
        let scaled = if shift >= 0 {
            x / Rat::from_integer(BigInt::one() << shift as usize)
        } else {
            x * Rat::from_integer(BigInt::one() << (-shift) as usize)
        };
        scaled.to_f64().unwrap_or(0.0) * 2f64.powi(shift as i32)
    })
}

/// Exact rational value of a finite `f64`.
pub fn from_f64(v: f64) -> Rat {
    Rat::from_float(v).expect("finite float")
}

pub fn pow(x: &Rat, n: u32) -> Rat {
    Pow::pow(x, n)
}

pub fn min(a: &Rat, b: &Rat) -> Rat {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn max(a: &Rat, b: &Rat) -> Rat {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Positive part `max(x, 0)`.
pub fn pos(x: &Rat) -> Rat {
    if x.is_positive() {
        x.clone()
    } else {
        Rat::zero()
    }
}

/// Largest dyadic `k / 2^b` with `(k / 2^b)^n <= x`, for `x >= 1`.
///
/// The precision `b` adapts to `n` and `x - 1` so the result stays strictly
/// above one whenever `x > 1`.
pub fn lower_root(x: &Rat, n: u32) -> Rat {
    assert!(n >= 1, "root index must be positive");
    assert!(*x >= Rat::one(), "lower_root expects x >= 1");
    if n == 1 || x.is_one() {
        return x.clone();
    }
    let excess = x - Rat::one();
    let ratio_bits = ceil(&(Rat::from_integer(BigInt::from(n)) / &excess)).bits();
    let b = 24 + 2 * ratio_bits as usize;
    let unit = BigInt::one() << b;
    // Invariant: lo^n <= x * 2^(bn) < hi^n in scaled integers.
    let lhs_scale = x.numer() * (BigInt::one() << (b * n as usize));
    let fits = |k: &BigInt| Pow::pow(k, n) * x.denom() <= lhs_scale;
    let mut lo = unit.clone();
    let mut hi = ceil(&(x * Rat::from_integer(unit.clone()))) + 1;
    while &hi - &lo > BigInt::one() {
        let mid: BigInt = (&lo + &hi) >> 1;
        if fits(&mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Rat::new(lo, unit)
}

/// `ceil(log2(x))` for positive `x`, as a signed integer.
pub fn ceil_log2(x: &Rat) -> i64 {
    assert!(x.is_positive());
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let mut e = nb - db - 1;
    loop {
        let p = two_pow(e);
        if p >= *x {
            let q = two_pow(e - 1);
            if q >= *x {
                e -= 1;
                continue;
            }
            return e;
        }
        e += 1;
    }
}

pub fn two_pow(e: i64) -> Rat {
    if e >= 0 {
        Rat::from_integer(BigInt::one() << e as usize)
    } else {
        Rat::new(BigInt::one(), BigInt::one() << (-e) as usize)
    }
}

/// Rational with the smallest denominator in the open interval `(a, b)`.
pub fn simplest_between(a: &Rat, b: &Rat) -> Rat {
    assert!(a < b, "simplest_between needs a < b");
    if a.is_negative() && b.is_positive() {
        return Rat::zero();
    }
    if !b.is_positive() {
        return -simplest_between(&-b, &-a);
    }
    simplest_nonneg(a, Some(b))
}

/// Simplest rational in `(a, b)` for `a >= 0`; `None` means `b = +inf`.
fn simplest_nonneg(a: &Rat, b: Option<&Rat>) -> Rat {
    let fa = floor(a);
    let next = Rat::from_integer(&fa + 1);
    match b {
        None => return next,
        Some(b) if &next < b => return next,
        _ => {}
    }
    let b = b.expect("bounded");
    let fa = Rat::from_integer(fa);
    // Inside (fa, fa + 1]: write q = fa + 1/y with y in (1/(b - fa), 1/(a - fa)).
    let lo = (b - &fa).recip();
    let hi = if *a == fa { None } else { Some((a - &fa).recip()) };
    let y = simplest_nonneg(&lo, hi.as_ref());
    fa + y.recip()
}

/// Least common multiple of the denominators.
pub fn denom_lcm<'a>(xs: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    xs.into_iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

pub fn is_nonneg(x: &Rat) -> bool {
    !x.is_negative()
}

/// Serde adapter storing a rational as its canonical string.
pub mod serde_rat {
    use super::Rat;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        super::from_json(&v).map_err(de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rat>`.
pub mod serde_rat_vec {
    use super::Rat;
    use serde::ser::SerializeSeq;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Rat], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&super::format(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
        let vs = Vec::<serde_json::Value>::deserialize(d)?;
        vs.iter()
            .map(|v| super::from_json(v).map_err(de::Error::custom))
            .collect()
    }
}

/// Reads a rational from a JSON string or number literal.
pub fn from_json(v: &serde_json::Value) -> Result<Rat, ParseRatError> {
    match v {
        serde_json::Value::String(s) => parse(s),
        serde_json::Value::Number(n) => parse(&n.to_string()),
        other => Err(bad(&other.to_string(), "expected a string or number")),
    }
}

pub fn to_json(x: &Rat) -> serde_json::Value {
    serde_json::Value::String(format(x))
}
