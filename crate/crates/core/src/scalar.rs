//! Scalar abstraction shared by plain floats and the forward-mode dual types.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic required by the filter pipeline.
///
/// Branch decisions inside piecewise-smooth maps are taken on the primal
/// value, so dual-number evaluation follows the same branch as the
/// underlying real computation.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;

    /// The underlying real value; used for branching and diagnostics.
    fn primal(self) -> f64;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan(self) -> Self;

    /// Four-quadrant arctangent of `self / x`.
    ///
    /// The default goes through the half-angle identity
    /// `atan2(y, x) = 2 atan(y / (r + x))`, which is undefined on the
    /// negative real axis; concrete floats override it with the native
    /// implementation.
    fn atan2(self, x: Self) -> Self {
        let r = (self * self + x * x).sqrt();
        (self / (r + x)).atan() * Self::from_f64(2.0)
    }

    fn powi(self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

macro_rules! impl_scalar_float {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_f64(v: f64) -> Self {
                num_traits::cast(v).expect("scalar literal out of range")
            }

            fn primal(self) -> f64 {
                self as f64
            }

            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }

            fn sin(self) -> Self {
                <$t>::sin(self)
            }

            fn cos(self) -> Self {
                <$t>::cos(self)
            }

            fn atan(self) -> Self {
                <$t>::atan(self)
            }

            fn atan2(self, x: Self) -> Self {
                <$t>::atan2(self, x)
            }
        }
    };
}

impl_scalar_float!(f32);
impl_scalar_float!(f64);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_impls_agree_with_std() {
        assert_eq!(<f64 as Scalar>::from_f64(2.5), 2.5);
        assert_eq!(2.0f64.powi(3), 8.0);
        assert_eq!((-1.0f64).atan2(-1.0), (-1.0f64).atan2(-1.0f64));
        assert_eq!(<f32 as Scalar>::from_f64(0.5).primal(), 0.5);
    }

    #[test]
    fn half_angle_atan2_matches_native_off_the_cut() {
        for &(y, x) in &[(1.0f64, 2.0), (-0.5, 0.3), (3.0, -0.1), (-2.0, 1.5)] {
            let r = (y * y + x * x).sqrt();
            let half = 2.0 * (y / (r + x)).atan();
            assert!((half - y.atan2(x)).abs() < 1e-12);
        }
    }
}
