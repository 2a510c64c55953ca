//! Seeded, platform-independent random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by the
//! run seed. Independent consumers (one per sample index, one per candidate
//! index, ...) get their own ChaCha stream: the key is expanded from the seed
//! with `seed_from_u64` and the 64-bit stream id is a SplitMix64 fold of a
//! domain tag and the consumer's indices. Streams never overlap, and the draws
//! seen by a consumer do not depend on how many draws any other consumer made.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Consumer families. Values are part of the reproducibility contract.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    NeuralWeights = 1,
    Valuations = 2,
    Contexts = 3,
    RestartStart = 4,
    PerturbedCombinatorial = 5,
    PerturbedTruthful = 6,
    GlobalRandom = 7,
    PerBidder = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id for a domain and index path.
pub fn stream_id(domain: Domain, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(splitmix64(domain as u64), |acc, &i| splitmix64(acc ^ splitmix64(i)))
}

/// Child generator for `(seed, domain, indices)`.
pub fn child_rng(seed: u64, domain: Domain, indices: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(domain, indices));
    rng
}

/// Derive a 64-bit seed for a nested consumer (e.g. one bidder of one sample).
pub fn child_seed(seed: u64, domain: Domain, indices: &[u64]) -> u64 {
    use rand::RngCore;
    child_rng(seed, domain, indices).next_u64()
}
