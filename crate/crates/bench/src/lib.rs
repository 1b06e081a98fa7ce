//! Shared inputs for the criterion benches.

use gaitbench_core::domain::{generate_dataset, Dataset, GeneratorConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn cohort(n_subjects: usize, cycles_per_class: usize) -> Dataset {
    generate_dataset(&GeneratorConfig {
        n_subjects,
        cycles_per_class,
        ..Default::default()
    })
    .expect("valid generator config")
}

pub fn gaussian_cloud(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}
