//! Core algorithms for robust classifier training under parametric image
//! corruptions.
//!
//! Everything in this crate is pure computation over heap-allocated buffers:
//! a dense tensor type with reverse-mode autodiff ([`tensor`]), a small
//! convolutional classifier and its Adadelta optimizer ([`classifier`],
//! [`optim`]), a differentiable corruption model with bounded severity
//! ([`nuisance`]), the training strategies that approximate the inner
//! maximization over corruption codes ([`strategies`]), and the metrics and
//! statistics used to compare them ([`metrics`], [`stats`]).
//!
//! The crate is `no_std` (with `alloc`). File formats, dataset IO, timing and
//! the command-line harness live in the companion `robench` crate; the only
//! host service this crate needs is an optional wall clock, injected through
//! [`strategies::Clock`].

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod augment;
pub mod classifier;
pub mod data;
pub mod metrics;
pub mod nuisance;
pub mod optim;
pub mod scalar;
pub mod stats;
pub mod strategies;
pub mod synth;
pub mod tensor;

pub use scalar::Scalar;
pub use tensor::{Tape, Tensor, TensorError};

use rand_chacha::ChaCha8Rng;

/// Deterministic RNG used everywhere a seeded stream is required.
pub type Rng = ChaCha8Rng;

/// Build the crate-wide RNG from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream from a base seed and a stream label.
///
/// SplitMix64-style mixing; distinct labels give uncorrelated streams.
pub fn derive_seed(base: u64, label: u64) -> u64 {
    let mut x = base ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
