use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use rand::distr::uniform::SampleUniform;
use serde::{de::DeserializeOwned, Serialize};
use std::fmt::{Debug, Display};
use std::num::ParseFloatError;
use std::str::FromStr;

/// Floating-point scalar type all numerical kernels are generic over.
///
/// Implemented for `f32` and `f64`; the crate-root aliases fix `f64` as the
/// working precision of the experiment harness.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + LinalgScalar
    + ScalarOperand
    + SampleUniform
    + FromStr<Err = ParseFloatError>
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Convert an `f64` constant to this scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
