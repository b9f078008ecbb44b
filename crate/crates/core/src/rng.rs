//! Counter-based random streams: one independent generator per
//! `(operation, seed, index)`, so parallel work items are reproducible
//! regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Tags separating the random streams of different operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Restart = 1,
    Codebook = 2,
    Encoder = 3,
    Decoder = 4,
    SoftCodebook = 5,
    Detector = 6,
    Game = 7,
    Experiment = 8,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed; used to nest counters (e.g. trial within n).
pub fn derive(seed: u64, index: u64) -> u64 {
    splitmix(splitmix(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Generator for work item `index` of operation `stream` under `seed`.
pub fn stream_rng(stream: Stream, seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(stream as u64)));
    rng.set_stream(index);
    rng
}

/// Draws an index from a probability vector by inversion.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let mut t = rng.random::<f64>();
    for (i, &p) in probs.iter().enumerate() {
        if t < p {
            return i;
        }
        t -= p;
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
