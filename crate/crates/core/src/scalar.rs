//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// All tolerances in the crate are written for double precision; [`Real::tol`]
/// widens them in proportion to the machine epsilon of the concrete type so
/// that single-precision instantiations stay usable.
pub trait Real:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts to `f64` for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// A double-precision tolerance scaled to this type's precision.
    #[inline]
    fn tol(x: f64) -> Self {
        let ratio = Self::default_epsilon().as_f64() / f64::EPSILON;
        Self::lit(x * ratio.max(1.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar built on a [`Real`].
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn creal<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// Modulus of a complex number.
#[inline]
pub(crate) fn cabs<T: Real>(z: C<T>) -> T {
    z.re.hypot(z.im)
}

#[inline]
pub(crate) fn abs<T: Real>(x: T) -> T {
    if x < T::zero() {
        -x
    } else {
        x
    }
}

#[inline]
pub(crate) fn max<T: Real>(a: T, b: T) -> T {
    if a >= b {
        a
    } else {
        b
    }
}

#[inline]
pub(crate) fn min<T: Real>(a: T, b: T) -> T {
    if a <= b {
        a
    } else {
        b
    }
}

/// `sinh(x) / x` with the removable singularity filled in.
#[inline]
pub(crate) fn sinhc<T: Real>(x: T) -> T {
    if x == T::zero() {
        T::one()
    } else {
        x.sinh() / x
    }
}

/// Divided difference of `exp` at `a`, `b`: `(e^a - e^b)/(a - b)`, or `e^a` when `a = b`.
///
/// Evaluated as `e^{(a+b)/2} sinh(δ/2)/(δ/2)`, which stays accurate when the
/// two arguments are close.
pub fn exp_divided_difference<T: Real>(a: T, b: T) -> T {
    let two = T::lit(2.0);
    let delta = a - b;
    let scale = max(T::one(), max(abs(a), abs(b)));
    let mid = ((a + b) / two).exp();
    if abs(delta) < T::lit(1e-12) * scale {
        mid
    } else {
        mid * sinhc(delta / two)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divided_difference_matches_plain_ratio_when_well_separated() {
        let (a, b) = (0.3_f64, -1.7_f64);
        let plain = (a.exp() - b.exp()) / (a - b);
        assert!((exp_divided_difference(a, b) - plain).abs() < 1e-14);
    }

    #[test]
    fn divided_difference_is_continuous_at_coincidence() {
        let a = 2.5_f64;
        assert_eq!(exp_divided_difference(a, a), a.exp());
        let near = exp_divided_difference(a, a + 1e-9);
        assert!((near - (a + 0.5e-9).exp()).abs() < 1e-12);
    }

    #[test]
    fn tolerances_widen_for_single_precision() {
        assert_eq!(<f64 as Real>::tol(1e-12), 1e-12);
        assert!(<f32 as Real>::tol(1e-12) > 1e-6);
    }
}
