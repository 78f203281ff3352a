//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 (`rand_chacha`), which produces the same
//! stream on every platform. A scenario's stream is keyed by `(seed, index)`:
//! the seed selects the key and the index selects the ChaCha stream, so
//! scenarios are independent of each other and of generation order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream for scenario `index` under `seed`.
pub fn scenario_rng(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an independent child generator, consuming one draw from `parent`.
pub fn child(parent: &mut SimRng) -> SimRng {
    ChaCha8Rng::seed_from_u64(parent.next_u64())
}
