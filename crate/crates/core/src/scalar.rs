use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};
use serde::Serialize;

/// Floating-point scalar the solvers are generic over.
///
/// Tolerances live here rather than as free constants so that single
/// precision gets thresholds that make sense for its 24-bit mantissa.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Sum + Default + Serialize + Send + Sync + 'static {
    /// Absolute pivot threshold of the simplex tableau.
    fn pivot_tol() -> Self;
    /// Relative feasibility tolerance, scaled by `1 + |b_i|` at use sites.
    fn feas_tol() -> Self;
    /// Tolerance for certificate re-verification and value comparisons.
    fn cert_tol() -> Self;
    /// Least representable value greater than `self`.
    fn next_up(self) -> Self;
    /// Greatest representable value less than `self`.
    fn next_down(self) -> Self;

    /// Converts an `f64` literal. Panics only if the target type cannot hold
    /// a finite double, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("scalar literal")
    }
}

impl Scalar for f64 {
    #[inline]
    fn next_up(self) -> Self {
        f64::next_up(self)
    }
    #[inline]
    fn next_down(self) -> Self {
        f64::next_down(self)
    }
    #[inline]
    fn pivot_tol() -> Self {
        1e-10
    }
    #[inline]
    fn feas_tol() -> Self {
        1e-9
    }
    #[inline]
    fn cert_tol() -> Self {
        1e-7
    }
}

impl Scalar for f32 {
    #[inline]
    fn next_up(self) -> Self {
        f32::next_up(self)
    }
    #[inline]
    fn next_down(self) -> Self {
        f32::next_down(self)
    }
    #[inline]
    fn pivot_tol() -> Self {
        1e-5
    }
    #[inline]
    fn feas_tol() -> Self {
        1e-4
    }
    #[inline]
    fn cert_tol() -> Self {
        1e-3
    }
}

/// `sgn(r) = 1` for `r >= 0`, `-1` otherwise.
#[inline]
pub fn sgn<T: Scalar>(r: T) -> T {
    if r >= T::zero() {
        T::one()
    } else {
        -T::one()
    }
}

#[inline]
pub(crate) fn pos<T: Scalar>(r: T) -> T {
    r.max(T::zero())
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}
