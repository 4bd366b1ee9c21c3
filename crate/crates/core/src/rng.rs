//! Seed derivation. Every stochastic stage draws from its own ChaCha stream
//! keyed by (seed, stage, index), so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Stage {
    Gates = 1,
    Emitter = 2,
    Spectral = 3,
    Detection = 4,
    Interferometer = 5,
    Michelson = 6,
    Scan = 7,
    Decay = 8,
    Noise = 9,
}

pub fn stream(seed: u64, stage: Stage, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stage as u64) << 40) ^ index);
    rng
}
