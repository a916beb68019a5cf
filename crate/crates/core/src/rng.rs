//! Deterministic derivation of independent random streams.
//!
//! Every Monte-Carlo worker draws from a stream keyed by `(master seed, tags...)`,
//! so results never depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a list of tags into a child seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// Random stream for `(master, tags)`.
pub fn stream_rng(master: u64, tags: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, tags))
}
