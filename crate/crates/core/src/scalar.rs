//! Scalar abstraction shared by every module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar used for coordinates, times, distances and weights.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only if the target type cannot hold it.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count or index.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Lossy conversion for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Reduces `x` modulo 1 onto `[0, 1)`.
///
/// `x - floor(x)` can round up to exactly 1 for tiny negative inputs; that case maps to 0.
pub fn wrap_unit<S: Scalar>(x: S) -> S {
    let r = x - x.floor();
    if r >= S::one() || r < S::zero() {
        S::zero()
    } else {
        r
    }
}

/// Arc distance on the circle of circumference 1.
pub fn arc_distance<S: Scalar>(a: S, b: S) -> S {
    let d = wrap_unit(a - b);
    d.min(S::one() - d)
}

/// Neumaier compensated summation. Summation order is the iteration order.
pub fn compensated_sum<S: Scalar, I: IntoIterator<Item = S>>(values: I) -> S {
    let mut sum = S::zero();
    let mut comp = S::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}
