//! Deterministic stream management.
//!
//! Every randomized routine in this crate takes an explicit generator, and
//! all generators trace back to a single `u64` seed. Independent substreams
//! are derived with ChaCha's stream feature: substream `i` of seed `s` is
//! `ChaCha12Rng::seed_from_u64(s)` switched to stream `i`. Two substreams
//! with different ids never overlap, and re-deriving the same id reproduces
//! the identical sequence.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The generator used throughout the crate.
pub type Stream = ChaCha12Rng;

/// Root generator for a seed (substream 0).
pub fn root(seed: u64) -> Stream {
    substream(seed, 0)
}

/// Derive the `id`-th independent substream of `seed`.
pub fn substream(seed: u64, id: u64) -> Stream {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
