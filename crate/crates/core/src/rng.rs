//! Counter-based random streams.
//!
//! Every experiment derives one ChaCha stream per (master seed, purpose,
//! trial) triple, so parallel trials reproduce identically regardless of
//! scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Namespaces for derived streams; values are stable across releases since
/// they participate in every seeded artifact.
#[derive(Debug, Clone, Copy)]
pub enum StreamKind {
    Samples = 1,
    Family = 2,
    Probes = 3,
    Search = 4,
    Noise = 5,
    Cover = 6,
}

/// Stream for a (seed, purpose, trial) triple.
pub fn stream(seed: u64, kind: StreamKind, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((kind as u64) << 48) ^ trial);
    rng
}

/// Splitmix64 mix of a master seed and a trial index; used where an API
/// takes a single seed per trial.
pub fn derive_seed(master: u64, trial: u64) -> u64 {
    let mut z = master ^ trial.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = stream(7, StreamKind::Samples, 3).random_iter().take(4).collect();
        let b: Vec<u64> = stream(7, StreamKind::Samples, 3).random_iter().take(4).collect();
        assert_eq!(a, b);
        let c: Vec<u64> = stream(7, StreamKind::Samples, 4).random_iter().take(4).collect();
        assert_ne!(a, c);
        let d: Vec<u64> = stream(7, StreamKind::Family, 3).random_iter().take(4).collect();
        assert_ne!(a, d);
    }
}
