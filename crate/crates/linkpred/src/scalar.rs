//! Floating-point abstraction the math core is generic over.
//!
//! Everything numeric (tensors, encoders, losses, metrics) is written
//! against [`Scalar`] so the same code runs in `f32` or `f64`. The crate
//! root exports `f64` aliases, which is what the CLI and the shipped
//! presets use.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Dense floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssignOps + Sum + Display + Debug + Send + Sync + 'static
{
    /// Converts from `f64`, rounding when the target is narrower.
    fn cast(v: f64) -> Self;

    /// Widens to `f64` (exact for both supported types).
    fn as_f64(self) -> f64;

    /// Uniform draw from `[lo, hi)`.
    fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self;

    /// Zero-mean normal draw with the given standard deviation.
    fn sample_normal<R: Rng + ?Sized>(rng: &mut R, std_dev: Self) -> Self;
}

impl Scalar for f32 {
    fn cast(v: f64) -> Self {
        v as f32
    }

    fn as_f64(self) -> f64 {
        f64::from(self)
    }

    fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
        rng.random_range(lo..hi)
    }

    fn sample_normal<R: Rng + ?Sized>(rng: &mut R, std_dev: Self) -> Self {
        let z: f32 = StandardNormal.sample(rng);
        z * std_dev
    }
}

impl Scalar for f64 {
    fn cast(v: f64) -> Self {
        v
    }

    fn as_f64(self) -> f64 {
        self
    }

    fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
        rng.random_range(lo..hi)
    }

    fn sample_normal<R: Rng + ?Sized>(rng: &mut R, std_dev: Self) -> Self {
        let z: f64 = StandardNormal.sample(rng);
        z * std_dev
    }
}
