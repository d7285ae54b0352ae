//! Benchmark inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stratlab::{DMatrix, Scalar, Subspace};

/// Seeded test matrix with entries uniform in `[-1, 1]`.
pub fn matrix<T: Scalar>(seed: u64, rows: usize, cols: usize) -> DMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| {
        let parts: Vec<f64> = (0..T::COMPONENTS).map(|_| rng.random_range(-1.0..=1.0)).collect();
        T::from_components(&parts)
    })
}

/// A generic `k`-dimensional subspace of the `n`-dimensional space.
pub fn subspace<T: Scalar>(seed: u64, n: usize, k: usize) -> Subspace<T> {
    Subspace::from_spanning(&matrix(seed, n, k))
}
