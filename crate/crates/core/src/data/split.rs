use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::DataError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub test_frac: f64,
    pub n_splits: usize,
    pub seed: u64,
    /// Preserve the class ratio in every test set.
    #[serde(default)]
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_frac: 0.2,
            n_splits: 5,
            seed: 7,
            stratified: false,
        }
    }
}

/// Independent random train/test partitions of `0..labels.len()`.
///
/// Each test set has `round(N · test_frac)` indices; both halves are sorted.
pub fn split(labels: &[u8], config: &SplitConfig) -> Result<Vec<Split>, DataError> {
    let n = labels.len();
    if n < 10 {
        return Err(DataError::TooFewRows(n));
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(DataError::SingleClassDataset);
    }
    if !(config.test_frac > 0.0 && config.test_frac < 1.0) {
        return Err(DataError::InvalidConfig(format!(
            "test_frac {} must lie in (0, 1)",
            config.test_frac
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.n_splits);
    for _ in 0..config.n_splits {
        let mut in_test = vec![false; n];
        if config.stratified {
            for class in [0u8, 1] {
                let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
                idx.shuffle(&mut rng);
                let k = (idx.len() as f64 * config.test_frac).round() as usize;
                for &i in &idx[..k] {
                    in_test[i] = true;
                }
            }
        } else {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let k = (n as f64 * config.test_frac).round() as usize;
            for &i in &idx[..k] {
                in_test[i] = true;
            }
        }
        let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| in_test[i]);
        out.push(Split { train, test });
    }
    Ok(out)
}
