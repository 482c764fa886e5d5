//! Seeded random streams.
//!
//! Every MCTS iteration draws from its own ChaCha stream keyed by
//! `(seed, iteration)`, so a run resumed from a saved trace consumes exactly
//! the same randomness as an uninterrupted one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SearchRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SearchRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn iteration_stream(seed: u64, iteration: usize) -> SearchRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration as u64 + 1);
    rng
}
