//! Small numeric helpers shared by the exact and log-space code paths.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Natural logarithm of a positive big integer, accurate to f64 precision.
///
/// Returns `-inf` for zero.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        if let Some(v) = x.to_f64() {
            return libm::log(v);
        }
    }
    // keep the top 64 bits; the dropped tail is below f64 resolution
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap_or(u64::MAX);
    libm::log(top as f64) + shift as f64 * core::f64::consts::LN_2
}

/// Natural logarithm of a positive rational.
pub fn ln_rational(x: &BigRational) -> f64 {
    let num = x.numer();
    let den = x.denom();
    match (num.sign(), den.sign()) {
        (Sign::Plus, Sign::Plus) | (Sign::Minus, Sign::Minus) => {
            ln_biguint(num.magnitude()) - ln_biguint(den.magnitude())
        }
        (Sign::NoSign, _) => f64::NEG_INFINITY,
        _ => f64::NAN,
    }
}

/// `base^exp` as a big integer.
pub fn pow_u(base: u32, exp: u64) -> BigUint {
    let mut acc = BigUint::one();
    let mut b = BigUint::from(base);
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    acc
}

/// `base^(-exp)` as an exact rational.
pub fn inv_pow(base: u32, exp: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(pow_u(base, exp)))
}

pub fn rational_from_u(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
