use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Floating-point element type. Training and sampling run in `f32`;
/// gradient verification runs the same code in `f64`.
pub trait Real:
    Float
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    const NAME: &'static str;

    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;

    fn from_f32(x: f32) -> Self;

    fn as_f32(self) -> f32;
}

impl Real for f32 {
    const NAME: &'static str = "f32";

    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_f32(x: f32) -> Self {
        x
    }

    #[inline]
    fn as_f32(self) -> f32 {
        self
    }
}

impl Real for f64 {
    const NAME: &'static str = "f64";

    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }

    #[inline]
    fn from_f32(x: f32) -> Self {
        x as f64
    }

    #[inline]
    fn as_f32(self) -> f32 {
        self as f32
    }
}
