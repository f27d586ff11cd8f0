//! Seeded, streamed random number generation.
//!
//! All randomness in the simulator flows through ChaCha8 streams so that
//! identical `(seed, instance)` pairs reproduce bit-identical results, and
//! parallel instances never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent RNG stream for simulator instance `instance` under `seed`.
pub fn instance_stream(seed: u64, instance: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instance);
    rng
}
