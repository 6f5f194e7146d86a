//! Deterministic derivation of independent random streams.
//!
//! Every randomized routine in the crate draws from a ChaCha generator whose
//! seed is a hash of the user's master seed, a domain tag, and the structural
//! indices of the work item (run index, resample iteration, task index).
//! Stream identity therefore depends only on *what* is being computed, never
//! on execution order, which makes results identical under any parallel
//! schedule.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keeping unrelated streams statistically independent.
pub mod domain {
    pub const SYNTH_CURVE: u64 = 0x01;
    pub const SYNTH_ROLLOUT: u64 = 0x02;
    pub const BOOTSTRAP: u64 = 0x03;
    pub const PERMUTATION: u64 = 0x04;
}

fn splitmix64(state: &mut u64) {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    *state = z ^ (z >> 31);
}

/// Derives a generator from `(seed, domain, words...)`.
pub fn stream_rng(seed: u64, domain: u64, words: &[u64]) -> ChaCha8Rng {
    let mut state = seed;
    splitmix64(&mut state);
    state ^= domain;
    splitmix64(&mut state);
    for &w in words {
        state ^= w;
        splitmix64(&mut state);
    }
    ChaCha8Rng::seed_from_u64(state)
}
