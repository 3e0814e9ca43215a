//! Seeded RNG substreams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by
//! (seed, domain, index), so results do not depend on scheduling or on how
//! many draws other consumers make.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Population = 1,
    Arms = 2,
    Behavior = 3,
    Performance = 4,
}

pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 40) | index);
    rng
}
