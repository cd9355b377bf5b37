//! Seeded random streams.
//!
//! Every random draw comes from a ChaCha8 generator keyed by a 64-bit seed and a
//! fixed stream id, so pilots, channels and noise drawn from the same seed are
//! independent and reproducible across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used for pilot sequences.
pub const PILOT_STREAM: u64 = 1;
/// Stream used for channel realizations.
pub const CHANNEL_STREAM: u64 = 2;
/// Stream used for additive noise.
pub const NOISE_STREAM: u64 = 3;

/// Generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
