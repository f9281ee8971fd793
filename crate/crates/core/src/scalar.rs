//! Numeric abstractions shared by the estimator, the LP and the policies.
//!
//! [`Scalar`] is the minimal ordered-field interface the simplex needs, so the
//! same solver runs over `f32`, `f64` and exact `BigRational`. [`Real`] adds the
//! floating-point operations the simulation needs (logs, powers, Gaussian
//! draws) and is implemented for `f32` and `f64` only.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// An ordered field usable by the simplex solver.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Neg<Output = Self> + Signed {
    /// Magnitude below which a pivot element or reduced cost counts as zero.
    /// Exactly zero for exact arithmetic.
    fn tolerance() -> Self;

    /// Unit roundoff, zero for exact arithmetic.
    fn roundoff() -> Self;

    fn is_exact() -> bool;

    fn to_f64_lossy(&self) -> f64;

    /// Conversion from a finite `f64`. Exact for rationals, rounded for `f32`.
    fn from_f64_finite(x: f64) -> Self;
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-11
    }
    fn roundoff() -> Self {
        f64::EPSILON
    }
    fn is_exact() -> bool {
        false
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
    fn from_f64_finite(x: f64) -> Self {
        x
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }
    fn roundoff() -> Self {
        f32::EPSILON
    }
    fn is_exact() -> bool {
        false
    }
    fn to_f64_lossy(&self) -> f64 {
        f64::from(*self)
    }
    fn from_f64_finite(x: f64) -> Self {
        x as f32
    }
}

impl Scalar for BigRational {
    fn tolerance() -> Self {
        BigRational::zero()
    }
    fn roundoff() -> Self {
        BigRational::zero()
    }
    fn is_exact() -> bool {
        true
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or_else(|| {
            // Very large numerators/denominators overflow the direct conversion.
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
    fn from_f64_finite(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
    }
}

/// Floating-point scalar used by the simulation engine.
pub trait Real:
    Scalar + Float + FromPrimitive + ToPrimitive + Copy + Display + Send + Sync + Default + 'static
{
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform draw from `[0, 1)`.
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }
}

impl Real for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f64>()
    }
}

impl Real for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f32>()
    }
}

/// Index of the first maximum. `None` on empty input.
pub fn argmax_first<T: PartialOrd + Copy>(values: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if !(v > values[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Index of the first minimum. `None` on empty input.
pub fn argmin_first<T: PartialOrd + Copy>(values: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if !(v < values[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_break_to_smallest_index() {
        assert_eq!(argmax_first(&[1.0, 3.0, 3.0]), Some(1));
        assert_eq!(argmin_first(&[2.0, 1.0, 1.0, 5.0]), Some(1));
        assert_eq!(argmax_first::<f64>(&[]), None);
    }

    #[test]
    fn rational_conversion_is_exact() {
        let q = BigRational::from_f64_finite(0.1);
        assert_eq!(q.to_f64_lossy(), 0.1);
        assert!(BigRational::is_exact());
        assert!(BigRational::tolerance().is_zero());
    }
}
