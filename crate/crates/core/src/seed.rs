//! Splitting one root seed into independent component seeds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The generator used for every seeded component.
pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seeds for the random parts of one run. Each can be overridden on its own,
/// e.g. to keep the transformations fixed while re-initialising the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeedStreams {
    pub bank: u64,
    pub init: u64,
    pub shuffle: u64,
}

impl SeedStreams {
    pub fn from_root(root: u64) -> Self {
        // Word stream 0 of the root generator; streams are fixed by position.
        let mut rng = ChaCha8Rng::seed_from_u64(root);
        Self {
            bank: rng.next_u64(),
            init: rng.next_u64(),
            shuffle: rng.next_u64(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_stable_and_distinct() {
        let a = SeedStreams::from_root(42);
        assert_eq!(a, SeedStreams::from_root(42));
        assert_ne!(a.bank, a.init);
        assert_ne!(a.init, a.shuffle);
        assert_ne!(a, SeedStreams::from_root(43));
    }
}
