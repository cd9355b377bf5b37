//! Floating-point scalar abstraction shared by every estimator.

use std::fmt::{Debug, Display, LowerExp};

use ndarray::ScalarOperand;
use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type the estimators are generic over. Implemented for `f32` and `f64`.
pub trait Real:
    'static
    + Send
    + Sync
    + Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Default
    + Display
    + LowerExp
    + Debug
    + ScalarOperand
{
    /// Machine epsilon as a plain value.
    fn eps() -> Self {
        Self::epsilon()
    }

    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion from a count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    /// Widening conversion used for special functions and reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type Cx<T> = Complex<T>;

/// `e^{j phase}`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Cx<T> {
    Complex::new(phase.cos(), phase.sin())
}

/// Complex zero.
#[inline]
pub fn czero<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

/// Complex number with zero imaginary part.
#[inline]
pub fn creal<T: Real>(re: T) -> Cx<T> {
    Complex::new(re, T::zero())
}
