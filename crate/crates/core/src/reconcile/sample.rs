use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::PairKey;

/// Name of the generator recorded in reports next to the seed.
pub const SAMPLE_PRNG: &str =
    "ChaCha8 (rand_chacha 0.3, seed_from_u64) + Fisher-Yates shuffle of sorted keys";

/// Sorts the keys, shuffles them with a ChaCha8 generator seeded from
/// `seed` and keeps the first `min(n, |keys|)`.
pub fn sample_unmatched(keys: &BTreeSet<PairKey>, n: usize, seed: u64) -> Vec<PairKey> {
    if n == 0 {
        return Vec::new();
    }
    let mut ordered: Vec<PairKey> = keys.iter().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ordered.shuffle(&mut rng);
    ordered.truncate(n);
    ordered
}
