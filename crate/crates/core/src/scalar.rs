// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Scalar abstraction shared by every numerical module.
//!
//! All physics and signal-processing code is written against [`Real`], which
//! is implemented for `f32` and `f64`. Tolerances quoted in the tests assume
//! `f64`; the `f32` instantiation is useful for bulk synthesis where memory
//! matters more than the last few digits.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating point scalar usable throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + rustfft::FftNum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this type.
    fn lit(x: f64) -> Self;

    /// Lossy conversion to `f64`, used for reporting and error payloads.
    fn as_f64(self) -> f64;

    /// Draws one standard normal deviate.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }

    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Converts a count into the scalar type.
#[inline]
pub(crate) fn count<T: Real>(n: usize) -> T {
    T::lit(n as f64)
}
