//! Seeded random streams.
//!
//! Every consumer of randomness draws from a named substream of one master
//! seed: the ChaCha key is derived from the master seed and the ChaCha stream
//! id is the 64-bit FNV-1a hash of the stream label (`"fmri-noise"`,
//! `"bot-restart-3"`, `"path-17"`, ...). Streams are therefore independent of
//! the order in which they are created, so parallel and serial execution
//! produce identical draws.

use alloc::format;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

pub fn fnv1a(label: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in label.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Returns the substream `label` of `master`.
pub fn stream(master: u64, label: &str) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(fnv1a(label));
    rng
}

/// Substream `"{prefix}-{index}"`.
pub fn indexed_stream(master: u64, prefix: &str, index: usize) -> StreamRng {
    stream(master, &format!("{prefix}-{index}"))
}

/// A `u64` seed for a sub-computation that takes its own master seed.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    stream(master, label).next_u64()
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
