//! Exact rational helpers, so every strict comparison is decided without
//! rounding. Computed values convert at their exact binary value; tolerances
//! typed by a user convert at their shortest decimal form, so `0.1` is `1/10`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub fn ratio(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::arg(format!("non-finite value {x}")))
}

/// The rational written by the shortest decimal that round-trips to `x`.
pub fn decimal(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::arg(format!("non-finite value {x}")));
    }
    let text = format!("{x:e}");
    let (mantissa, exp) = text.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(m) => (-1, m),
        None => (1, mantissa),
    };
    let frac_len = digits.split_once('.').map_or(0, |(_, f)| f.len()) as i32;
    let n: BigInt = digits.replace('.', "").parse().expect("decimal digits");
    let shift = exp - frac_len;
    let ten = BigInt::from(10u32);
    let r = if shift >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, shift as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-shift) as usize))
    };
    Ok(if sign < 0 { -r } else { r })
}

pub fn int(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `count ≥ frac · total`, exactly.
pub fn at_least_fraction(count: usize, total: usize, frac: &BigRational) -> bool {
    int(count) >= frac * int(total)
}

/// Natural log of a big unsigned integer (finite for positive input).
pub fn ln_biguint(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// `1 - x`.
pub fn complement(x: &BigRational) -> BigRational {
    BigRational::one() - x
}
