//! Scalar abstraction so the whole stack runs in f32 (training) or f64
//! (tight gradient-check oracles) from a single build.

use core::fmt::{Debug, Display};
use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point element type of tensors and everything built on them.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssignOps + Debug + Display + Default + Send + Sync + 'static
{
    /// Convert an f64 literal; panics only on non-finite input.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 literal")
    }

    /// Widen to f64 for metrics and reporting.
    fn to64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }

    /// Raw bits, for bit-exactness assertions and checksums.
    fn bits(self) -> u64;
}

impl Scalar for f32 {
    fn bits(self) -> u64 {
        self.to_bits() as u64
    }
}

impl Scalar for f64 {
    fn bits(self) -> u64 {
        self.to_bits()
    }
}
