//! Shared fixtures for the benchmarks.

use probclust_core::data::{generate_mixture, MixtureComponent, MixtureSpec};
use probclust_core::{FeatVec, ProbSpace};

/// `n` rows from four unit-variance components spread over `dim` dimensions.
pub fn mixture(n: usize, dim: usize, seed: u64) -> Vec<FeatVec> {
    let components = (0..4)
        .map(|i| MixtureComponent {
            weight: 0.25,
            center: (0..dim)
                .map(|j| if j % 4 == i { 10.0 } else { 0.0 })
                .collect(),
            sigma: vec![1.0; dim],
        })
        .collect();
    generate_mixture(&MixtureSpec {
        components,
        n,
        seed,
    })
    .expect("fixture spec is valid")
    .vectors
}

/// Zero-scale spaces centered on the first `n` fixture rows.
pub fn point_spaces(n: usize, dim: usize) -> Vec<ProbSpace> {
    mixture(n, dim, 1)
        .into_iter()
        .map(ProbSpace::point)
        .collect()
}
