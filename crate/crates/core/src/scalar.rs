//! Scalar abstraction shared by every module.
//!
//! All amplitudes are `Complex<T>` with `T: Real`. The numerical thresholds
//! that decide preclusion, unitarity and geometric membership live on the
//! trait so that `f32` builds get thresholds matching their precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type the library is generic over.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self;

    /// Normalization tolerance for qubit states and joint states.
    fn norm_tol() -> Self;

    /// Largest imaginary residue tolerated on `D(E;E)` before it is an error.
    fn imag_residue_tol() -> Self;

    /// Probabilities and measures at or below this value count as zero.
    fn zero_probability() -> Self;

    /// Max-entry tolerance on `U†U - I` and on projector idempotence.
    fn unitarity_tol() -> Self;

    /// Tolerance on projection residuals in span/orthogonality tests.
    fn geometry_tol() -> Self;

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    fn norm_tol() -> Self {
        1e-12
    }
    fn imag_residue_tol() -> Self {
        1e-9
    }
    fn zero_probability() -> Self {
        1e-14
    }
    fn unitarity_tol() -> Self {
        1e-10
    }
    fn geometry_tol() -> Self {
        1e-10
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    fn norm_tol() -> Self {
        1e-5
    }
    fn imag_residue_tol() -> Self {
        1e-4
    }
    fn zero_probability() -> Self {
        1e-7
    }
    fn unitarity_tol() -> Self {
        1e-4
    }
    fn geometry_tol() -> Self {
        1e-4
    }
}

#[inline]
pub(crate) fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

/// `Σ conj(a_i) b_i`.
pub(crate) fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

pub(crate) fn norm_sqr<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_are_ordered() {
        fn check<T: Real>() {
            assert!(T::zero_probability() < T::norm_tol() || T::zero_probability() < T::geometry_tol());
            assert!(T::norm_tol() <= T::imag_residue_tol());
        }
        check::<f64>();
        check::<f32>();
    }

    #[test]
    fn inner_is_conjugate_linear_in_first_slot() {
        let a = [c(0.0, 1.0), c(1.0, 0.0)];
        let b = [c(1.0, 0.0), c(0.0, 0.0)];
        assert_eq!(inner::<f64>(&a, &b), c(0.0, -1.0));
    }
}
