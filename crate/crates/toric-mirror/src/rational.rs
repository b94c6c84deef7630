//! Small helpers for exact rational arithmetic used throughout the crate.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Floor of a rational as a BigInt.
pub fn floor_int(x: &BigRational) -> BigInt {
    x.floor().to_integer()
}

/// Ceiling of a rational as a BigInt.
pub fn ceil_int(x: &BigRational) -> BigInt {
    x.ceil().to_integer()
}

/// Fractional part {x} = x - floor(x), always in [0, 1).
pub fn frac(x: &BigRational) -> BigRational {
    x - BigRational::from_integer(floor_int(x))
}

pub fn is_integer(x: &BigRational) -> bool {
    x.denom().is_one()
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("rational out of f64 range")
}

/// Parse "a/b", "a" or a decimal like "0.05" into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((w, f)) = s.split_once('.') {
        let sign = if w.trim_start().starts_with('-') { -1 } else { 1 };
        let w: BigInt = if w.is_empty() || w == "-" { BigInt::zero() } else { w.parse().ok()? };
        if f.is_empty() || !f.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let fnum: BigInt = f.parse().ok()?;
        let den = BigInt::from(10u32).pow(f.len() as u32);
        let frac_part = BigRational::new(fnum, den);
        let whole = BigRational::from_integer(w.abs());
        let v = whole + frac_part;
        return Some(if sign < 0 { -v } else { v });
    }
    let n: BigInt = s.parse().ok()?;
    Some(BigRational::from_integer(n))
}

/// lcm of two positive integers.
pub fn lcm_big(a: &BigInt, b: &BigInt) -> BigInt {
    use num::Integer;
    a.lcm(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_negative() {
        assert_eq!(frac(&rat(-1, 2)), rat(1, 2));
        assert_eq!(frac(&rat(-3, 2)), rat(1, 2));
        assert_eq!(frac(&int(-1)), int(0));
        assert_eq!(frac(&rat(7, 3)), rat(1, 3));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/4"), Some(rat(3, 4)));
        assert_eq!(parse_rational("-2"), Some(int(-2)));
        assert_eq!(parse_rational("0.05"), Some(rat(1, 20)));
        assert_eq!(parse_rational("-0.5"), Some(rat(-1, 2)));
        assert_eq!(parse_rational("1/0"), None);
    }
}
