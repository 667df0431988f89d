//! Random rule-search instances for property tests and benchmarks.

use arm_core::BinarizedMatrix;
use rand::Rng;

/// A binary dataset with model labels and the row to explain.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub matrix: BinarizedMatrix,
    pub labels: Vec<u8>,
    pub row: usize,
}

/// Rows of `n_original` independent biased bits; labels from a noisy
/// threshold on a random weighting, so short rules usually exist.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, n_original: usize, n_rows: usize) -> RandomInstance {
    let bias: Vec<f64> = (0..n_original).map(|_| rng.gen_range(0.15..0.85)).collect();
    let weights: Vec<f64> = (0..n_original).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let originals: Vec<Vec<u8>> = (0..n_rows)
        .map(|_| bias.iter().map(|&b| u8::from(rng.gen_bool(b))).collect())
        .collect();
    let cut = rng.gen_range(-0.5..0.5);
    let noise = rng.gen_range(0.0..0.6);
    let labels = originals
        .iter()
        .map(|r| {
            let z: f64 = r.iter().zip(&weights).map(|(&x, w)| f64::from(x) * w).sum();
            u8::from(z + rng.gen_range(-noise..=noise) > cut)
        })
        .collect();
    RandomInstance {
        matrix: BinarizedMatrix::from_originals(n_original, &originals),
        labels,
        row: rng.gen_range(0..n_rows),
    }
}
