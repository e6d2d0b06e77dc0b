//! Counter-based streams keyed by `(seed, replication, role)`.
//!
//! ChaCha8 is a counter-mode generator: the key is built from the seed and
//! the replication index and the role selects the stream, so any stream can
//! be created independently of all others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream roles used by the simulator and harness.
pub mod role {
    /// Initial state, actions, and transitions of the direct simulator.
    pub const CONTROL: u64 = 0;
    /// Harness-level draws that are not part of a trajectory.
    pub const HARNESS: u64 = 1;
    /// First auxiliary-column stream; row `(l, s)` uses `AUX_BASE + l·d + s`.
    pub const AUX_BASE: u64 = 1 << 32;
}

pub fn stream(seed: u64, replication: u64, role: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replication.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(role);
    rng
}

/// Inverse-CDF draw from `probs`, returning the last index with positive
/// mass if rounding leaves `u` above the cumulative sum.
#[inline]
pub fn sample_index<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}
