//! Seeded random streams.
//!
//! Every consumer of randomness draws from its own ChaCha stream derived from
//! the run seed, so toggling one feature (compliance, the ledger, the solver)
//! never shifts the draws seen by another. Stream offsets are part of the
//! reproducibility contract and must not be renumbered.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub mod streams {
    pub const ARRIVAL_COUNTS: u64 = 0;
    pub const SPAWN_POSITIONS: u64 = 1;
    pub const ENERGY_REQUESTS: u64 = 2;
    pub const WEIGHT_DRAWS: u64 = 3;
    pub const PROTOCOL: u64 = 4;
    pub const COMPLIANCE: u64 = 5;
    pub const TIP_SELECTION: u64 = 6;
    /// Wind stations use `RENEWABLES + station index`.
    pub const RENEWABLES: u64 = 100;
    pub const PLACEMENT: u64 = 1000;
}

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
