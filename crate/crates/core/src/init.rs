use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::RealArray;

/// Seeded parameter initializer.
pub struct Initializer {
    rng: ChaCha8Rng,
}

impl Initializer {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Entries drawn from `U(-bound, bound)`.
    pub fn uniform(&mut self, shape: Vec<usize>, bound: f64) -> RealArray {
        let n = shape.iter().product();
        let data = (0..n)
            .map(|_| {
                if bound > 0.0 {
                    self.rng.random_range(-bound..bound)
                } else {
                    0.0
                }
            })
            .collect();
        RealArray::from_parts(shape, data)
    }

    pub fn fan_in(&mut self, shape: Vec<usize>, fan_in: usize) -> RealArray {
        self.uniform(shape, 1.0 / (fan_in.max(1) as f64).sqrt())
    }
}
