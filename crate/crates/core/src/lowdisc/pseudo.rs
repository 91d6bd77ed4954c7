use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PointSetSpec;

/// Uniform pseudo-random points from a ChaCha8 stream. Point `i` occupies a
/// fixed window of the keystream, located by seeking, so access is random.
#[derive(Debug, Clone)]
pub struct PseudoRandom {
    seed: u64,
    dimension: usize,
    count: usize,
    skip: u64,
}

impl PseudoRandom {
    pub fn new(spec: &PointSetSpec) -> Self {
        PseudoRandom {
            seed: spec.scramble_seed.unwrap_or(0),
            dimension: spec.dimension,
            count: spec.count,
            skip: spec.skip,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub fn fill(&self, index: usize, out: &mut [f64]) {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.skip as u128 + index as u128;
        rng.set_word_pos(n * self.dimension as u128 * 2);
        for o in out.iter_mut() {
            *o = (rng.next_u64() >> 11) as f64 * SCALE;
        }
    }
}
