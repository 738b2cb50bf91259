//! Secrecy-rate model for movable-antenna transmitters facing an
//! eavesdropper with uncertain position, and a simulated-annealing
//! projected-gradient optimizer for the antenna positions and beamformer.
//!
//! The crate is `no_std` with `alloc`. All randomness flows through
//! explicitly seeded generators.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod channel;
pub mod error;
pub mod geometry;
pub mod gradients;
pub mod harness;
mod math;
pub mod metrics;
pub mod optimizer;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use channel::{ChannelModel, ChannelRealization, LinkSide, PathSet};
pub use error::{Error, Result};
pub use geometry::{ArrayLayout, EveRegion, EveSampling, MoveRegion, Pairing, Position3};
pub use metrics::{secrecy_report, Beamformer, SecrecyReport};

/// Deterministic generator for `(seed, stream)`; distinct streams of one
/// seed are independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
