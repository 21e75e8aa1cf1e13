//! Seed derivation for reproducible, order-independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream type used throughout the lab.
pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit mix of two words. Not commutative: `mix(a, b) != mix(b, a)` in general.
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b.rotate_left(17) ^ 0xD6E8_FEB8_6659_FD93)
}

/// Named sub-streams of an agent seed. Each purpose gets an independent generator so
/// that, for example, changing the replay sampling never perturbs emotion noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Personality = 1,
    Init = 2,
    Environment = 3,
    ActionNoise = 4,
    Replay = 5,
    Episode = 6,
}

pub fn stream(seed: u64, which: Stream) -> StreamRng {
    StreamRng::seed_from_u64(mix(seed, which as u64))
}

pub fn seeded(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}
