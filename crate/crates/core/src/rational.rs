//! Exact rational numbers and their decimal text forms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational scalar used throughout the crate.
pub type Q = BigRational;

pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `-12.5`, `19`, `.5`, `1e3` or `p/q` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Q> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let n = parse_rational(num)?;
        let d = parse_rational(den)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = match digits.split_once('.') {
        Some((w, f)) => (w, f),
        None => (digits, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole
        .chars()
        .chain(frac.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let joined = format!("{whole}{frac}");
    let numer: BigInt = if joined.is_empty() {
        BigInt::zero()
    } else {
        joined.parse().ok()?
    };
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Q::from_integer(numer);
    if scale >= 0 {
        value *= Q::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Q::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

/// Number of decimal digits needed to write `q` exactly, or `None` when the
/// expansion does not terminate.
pub fn decimal_places(q: &Q) -> Option<usize> {
    let mut den = q.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    den.is_one().then_some(twos.max(fives))
}

/// Shortest exact decimal with at least one fractional digit (`19.0`,
/// `5316.5`). Non-terminating values fall back to `p/q`.
pub fn format_decimal(q: &Q) -> String {
    match decimal_places(q) {
        Some(places) => fixed_point(q, places.max(1)),
        None => format!("{}/{}", q.numer(), q.denom()),
    }
}

/// Coefficient form: integers without a fractional part, otherwise as
/// [`format_decimal`].
pub fn format_coefficient(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format_decimal(q)
    }
}

fn fixed_point(q: &Q, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = (q * Q::from_integer(scale)).to_integer();
    let negative = scaled.is_negative();
    let digits = scaled.abs().to_string();
    let digits = if digits.len() <= places {
        format!("{}{}", "0".repeat(places + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (whole, frac) = digits.split_at(digits.len() - places);
    format!("{}{whole}.{frac}", if negative { "-" } else { "" })
}

/// Rounds half away from zero to `places` decimals.
pub fn round_to(q: &Q, places: usize) -> Q {
    let scale = Q::from_integer(num_traits::pow(BigInt::from(10), places));
    (q * &scale).round() / scale
}

/// Leaf confidences print rounded to four decimals, trailing zeros trimmed
/// (`1.0`, `0.9882`).
pub fn format_confidence(q: &Q) -> String {
    format_decimal(&round_to(q, 4))
}

/// Text form that [`parse_rational`] reads back exactly.
pub fn to_exact_string(q: &Q) -> String {
    match decimal_places(q) {
        Some(0) => q.numer().to_string(),
        Some(places) => fixed_point(q, places),
        None => format!("{}/{}", q.numer(), q.denom()),
    }
}

pub fn to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Exact conversion of a finite float.
pub fn from_f64(x: f64) -> Option<Q> {
    Q::from_float(x)
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Q>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

pub fn gcd_of_numerators<'a>(values: impl IntoIterator<Item = &'a Q>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::zero(), |acc, q| acc.gcd(q.numer()))
}
