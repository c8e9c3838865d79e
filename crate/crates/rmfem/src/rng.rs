//! Seeded, splittable random number streams.
//!
//! Every stochastic component draws from a ChaCha stream derived from
//! (master seed, stream index). Streams with distinct indices are
//! statistically independent, so results do not depend on worker scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Derive the substream `index` of the generator seeded by `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
