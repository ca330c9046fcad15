//! Scalar abstraction so the numeric kernels work for any float width.
//!
//! `Scalar` is what the measures need; `SimScalar` adds the primitive draws
//! used by the innovation samplers; `SarScalar` adds what the dense SAR
//! solve requires. `f32` and `f64` satisfy all three, and the crate root
//! exports `*64` aliases for the common concrete case.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + FromStr
    + NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + FromStr
        + NumAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Scalar that the innovation distributions can be sampled in.
pub trait SimScalar: Scalar {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// Uniform draw from the open interval (0, 1).
    fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl SimScalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Open01.sample(rng)
    }
}

impl SimScalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Open01.sample(rng)
    }
}

/// Scalar usable in the dense `(I - rho W)` factorization.
pub trait SarScalar: SimScalar + nalgebra::RealField {}

impl<T> SarScalar for T where T: SimScalar + nalgebra::RealField {}

/// Convert an `f64` constant into the working scalar type.
pub(crate) fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant not representable in scalar type")
}
