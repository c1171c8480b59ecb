#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wsvm::{Dataset, KernelSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform features in [-2, 2] with roughly a third of the entries zeroed.
pub fn random_data(rng: &mut ChaCha8Rng, l: usize, d: usize) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..l)
        .map(|_| {
            (0..d)
                .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(-2.0..2.0) })
                .collect()
        })
        .collect();
    Dataset::from_dense(&rows).unwrap()
}

/// Random ±1 labels with both classes present.
pub fn random_labels(rng: &mut ChaCha8Rng, l: usize) -> Vec<f64> {
    let mut y: Vec<f64> = (0..l).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let a = rng.random_range(0..l);
    let mut b = rng.random_range(0..l);
    if b == a {
        b = (a + 1) % l;
    }
    y[a] = 1.0;
    y[b] = -1.0;
    y
}

/// The four kernels, cycled by index.
pub fn kernel_cycle(i: usize) -> KernelSpec {
    match i % 4 {
        0 => KernelSpec::linear(),
        1 => KernelSpec::rbf(0.5),
        2 => KernelSpec::polynomial(0.5, 1.0, 3),
        _ => KernelSpec::sigmoid(0.05, 0.0),
    }
}
