//! Scalar abstraction for the emulation kernels.
//!
//! The arithmetic in [`crate::minifloat`] is exact integer-significand math; the
//! backing scalar only matters at the boundaries. We seal the trait to `f32` and
//! `f64`: every value representable in the supported minifloat formats is exactly
//! representable in both backings (the widest format is IEEE single itself).

use num_traits::Float;

mod private {
    pub trait Sealed {}
    impl Sealed for f32 {}
    impl Sealed for f64 {}
}

/// A scalar the emulation can run on. Implemented for `f32` and `f64` only.
pub trait Real: private::Sealed + Float + Copy + PartialOrd + std::fmt::Debug {
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Real for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Real for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
}
