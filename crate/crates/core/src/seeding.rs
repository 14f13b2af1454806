//! Derivation of independent RNG streams from a global seed.
//!
//! Every parallel unit of work (a question group, a synthetic duplicate)
//! owns a stream derived from the global seed and its own stable key, so
//! thread count and work order never change output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes the seed with a sequence of u64 parts.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut state = seed ^ 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        state = splitmix(state ^ p);
    }
    state
}

/// Stream for one question group, keyed by its hex question id.
pub fn group_rng(seed: u64, question_id: &str) -> ChaCha8Rng {
    let qhash = u64::from_str_radix(question_id, 16).unwrap_or_else(|_| {
        // Non-hex ids still get a stable stream.
        question_id
            .bytes()
            .fold(0u64, |acc, b| splitmix(acc ^ b as u64))
    });
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[qhash]))
}

pub fn sub_rng(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, parts))
}
