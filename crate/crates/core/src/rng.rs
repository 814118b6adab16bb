//! Deterministic, derivable random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by the global
//! seed and a path of integers (e.g. `[VIDEO, video_index, frame_index]`), so
//! results do not depend on evaluation order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a path of stream identifiers into a new 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let base = derive_seed(seed, path);
    let mut key = [0u8; 32];
    let mut s = base;
    for chunk in key.chunks_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Well-known stream tags.
pub mod tag {
    pub const KEYGEN: u64 = 1;
    pub const SCHEDULE: u64 = 2;
    pub const WINDOW: u64 = 3;
    pub const ENCODE: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const CHANNEL: u64 = 6;
    pub const ATTACK: u64 = 7;
    pub const DETECT: u64 = 8;
    pub const MESSAGE: u64 = 9;
    pub const NULL_VIDEO: u64 = 10;
    pub const FIT: u64 = 11;
    pub const VIDEO: u64 = 12;
}
