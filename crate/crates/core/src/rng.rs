//! Deterministic, labelled random streams.
//!
//! Every run is keyed by a 64-bit seed. The seed fills the ChaCha key and each
//! consumer gets its own ChaCha stream id, so environment noise, context
//! draws, action sampling and oracle randomness never share draws:
//!
//! ```text
//! key    = seed (little-endian) || 0u64 x 3
//! stream = label as u64
//! ```
//!
//! Within a stream, draws are consumed strictly in round order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Contexts = 1,
    Noise = 2,
    Actions = 3,
    Oracle = 4,
    Instance = 5,
    Sampler = 6,
}

/// Returns the generator for `(seed, stream)`.
pub fn stream(seed: u64, label: Stream) -> ChaCha8Rng {
    stream_with_index(seed, label as u64)
}

/// Stream keyed by a raw index; used for block-parallel samplers.
pub fn stream_with_index(seed: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// SplitMix64 finalizer; hashes a tuple of counters into a uniform `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform in `[0, 1)` from a counter tuple.
pub fn counter_uniform(parts: &[u64]) -> f64 {
    let h = parts.iter().fold(0u64, |acc, &p| mix64(acc ^ p));
    (h >> 11) as f64 / (1u64 << 53) as f64
}
