//! Coefficient field abstraction so the series code runs in `f64` or in
//! exact rational arithmetic.

use num::bigint::BigInt;
use num::traits::{One, Signed, ToPrimitive, Zero};
use num::BigRational;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    /// Exact for every finite binary64 value.
    fn from_f64(x: f64) -> Self;
    fn from_i64(x: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_i64(x: i64) -> Self {
        x as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

impl Scalar for BigRational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite value required for exact mode")
    }
    fn from_i64(x: i64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

/// Generalised binomial coefficient `binom(-1/2, l)`.
pub fn binom_minus_half<T: Scalar>(l: usize) -> T {
    let mut c = T::one();
    for i in 0..l {
        // binom(a, i+1) = binom(a, i) * (a - i) / (i + 1), a = -1/2
        c = c * T::from_ratio(-1 - 2 * i as i64, 2 * (i as i64 + 1));
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_half_values() {
        assert_eq!(binom_minus_half::<f64>(0), 1.0);
        assert_eq!(binom_minus_half::<f64>(1), -0.5);
        assert_eq!(binom_minus_half::<f64>(2), 0.375);
        let exact: BigRational = binom_minus_half(3);
        assert_eq!(exact, BigRational::new(BigInt::from(-5), BigInt::from(16)));
    }

    #[test]
    fn dyadic_round_trip() {
        let x = 0.7_f64;
        let r = <BigRational as Scalar>::from_f64(x);
        assert_eq!(Scalar::to_f64(&r), x);
    }
}
