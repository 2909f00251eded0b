//! Seeded random substreams. Each decision category draws from its own
//! stream of the same seed, so two runs that differ in one policy still see
//! identical draws everywhere else.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Job permutation generation (one per run).
    Permutation = 0,
    /// Random movement choices inside the buffer.
    Movement = 1,
}

/// Deterministic generator for one decision category of a seeded run.
pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
