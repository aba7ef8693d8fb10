//! Floating-point abstraction shared by the analytic modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the closed-form densities and the integrator are written against.
///
/// Implemented for `f32` and `f64`. Statistics and histograms are always
/// accumulated in `f64` regardless of the scalar used for the state.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Panics only for values not representable at all.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Lossy widening used by the statistics layer.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `1 / sqrt(pi)`.
    #[inline]
    fn inv_sqrt_pi() -> Self {
        Self::FRAC_2_SQRT_PI() * Self::lit(0.5)
    }

    /// Relative tolerance that iterative routines aim for at this precision.
    fn rel_tol() -> Self;
}

impl Scalar for f64 {
    fn rel_tol() -> Self {
        1e-13
    }
}

impl Scalar for f32 {
    fn rel_tol() -> Self {
        1e-6
    }
}

/// `ln(cosh z)` without overflow: `|z| + ln(1 + e^{-2|z|}) - ln 2`.
#[inline]
pub fn ln_cosh<T: Scalar>(z: T) -> T {
    let a = z.abs();
    a + (-(a + a)).exp().ln_1p() - T::LN_2()
}
