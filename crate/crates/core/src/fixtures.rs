//! Random models and rows for property tests, benchmarks and demos.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::binarize::{FeatureSpec, Monotonicity, RawValue};
use crate::model::{ArmModel, Subscale};

#[derive(Debug, Clone)]
pub struct RandomModelOptions {
    pub n_features: usize,
    pub max_thresholds: usize,
    pub n_subscales: usize,
    /// Feature values are drawn from `[0, value_range)`.
    pub value_range: f64,
    /// Largest coefficient magnitude.
    pub max_coefficient: f64,
}

impl Default for RandomModelOptions {
    fn default() -> Self {
        Self {
            n_features: 6,
            max_thresholds: 5,
            n_subscales: 3,
            value_range: 100.0,
            max_coefficient: 2.0,
        }
    }
}

/// A model satisfying every sign constraint: random monotone directions,
/// integer thresholds, a random partition into non-empty subscales.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, options: &RandomModelOptions) -> ArmModel {
    let specs: Vec<FeatureSpec> = (0..options.n_features)
        .map(|p| {
            let monotonicity = *[Monotonicity::Increasing, Monotonicity::Decreasing, Monotonicity::None]
                .choose(rng)
                .expect("non-empty");
            let n = rng.gen_range(0..=options.max_thresholds);
            let mut thresholds: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(0..options.value_range as i64) as f64)
                .collect();
            thresholds.sort_by(f64::total_cmp);
            thresholds.dedup();
            FeatureSpec::new(format!("x{p}"), monotonicity, thresholds).with_missing_codes(vec![-9.0])
        })
        .collect();

    let k = options.n_subscales.clamp(1, options.n_features.max(1));
    let mut order: Vec<usize> = (0..options.n_features).collect();
    order.shuffle(rng);
    let mut members = vec![Vec::new(); k];
    for (i, &p) in order.iter().enumerate() {
        let slot = if i < k { i } else { rng.gen_range(0..k) };
        members[slot].push(p);
    }
    let subscales = members
        .into_iter()
        .enumerate()
        .map(|(s, mut features)| {
            features.sort_unstable();
            let mut coefficients = Vec::new();
            for &p in &features {
                let spec = &specs[p];
                for kind in spec.binary_kinds() {
                    let constrained = kind.is_threshold() && spec.monotonicity != Monotonicity::None;
                    let c = if constrained {
                        // Some exact zeros, as a fitted model has.
                        if rng.gen_bool(0.2) {
                            0.0
                        } else {
                            rng.gen_range(0.0..options.max_coefficient)
                        }
                    } else {
                        rng.gen_range(-options.max_coefficient..options.max_coefficient)
                    };
                    coefficients.push(c);
                }
            }
            Subscale {
                name: format!("s{s}"),
                features,
                coefficients,
                bias: rng.gen_range(-2.0..2.0),
            }
        })
        .collect::<Vec<_>>();
    let weights = (0..subscales.len()).map(|_| rng.gen_range(0.0..4.0)).collect();
    ArmModel::new(specs, subscales, weights, rng.gen_range(-2.0..2.0)).expect("constraints hold by construction")
}

/// A row for `model` with each value missing with probability `missing_rate`.
pub fn random_row<R: Rng + ?Sized>(rng: &mut R, model: &ArmModel, value_range: f64, missing_rate: f64) -> Vec<RawValue> {
    model
        .specs()
        .iter()
        .map(|_| {
            if rng.gen_bool(missing_rate) {
                None
            } else if rng.gen_bool(0.3) {
                // Land exactly on integers so threshold ties are exercised.
                Some(rng.gen_range(-1..=value_range as i64 + 1) as f64)
            } else {
                Some(rng.gen_range(-1.0..value_range + 1.0))
            }
        })
        .collect()
}

/// Ascending sweep values for a feature: every threshold, its neighbours at
/// `±eps`, and points beyond both ends.
pub fn threshold_grid(spec: &FeatureSpec, eps: f64) -> Vec<f64> {
    let mut grid = Vec::with_capacity(3 * spec.thresholds.len() + 2);
    for &t in &spec.thresholds {
        grid.extend([t - eps, t, t + eps]);
    }
    let lo = spec.thresholds.first().copied().unwrap_or(0.0);
    let hi = spec.thresholds.last().copied().unwrap_or(0.0);
    grid.extend([lo - 1.0, hi + 1.0]);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn models_are_valid_and_reproducible() {
        let opts = RandomModelOptions::default();
        let a = random_model(&mut ChaCha8Rng::seed_from_u64(3), &opts);
        let b = random_model(&mut ChaCha8Rng::seed_from_u64(3), &opts);
        assert_eq!(a, b);
        assert_eq!(a.n_subscales(), 3);
        assert!(a.subscales().iter().all(|s| !s.features.is_empty()));
    }

    #[test]
    fn grid_is_sorted() {
        let spec = FeatureSpec::new("x", Monotonicity::Decreasing, vec![10.0, 50.0]);
        assert_eq!(
            threshold_grid(&spec, 0.5),
            vec![9.0, 9.5, 10.0, 10.5, 49.5, 50.0, 50.5, 51.0]
        );
    }
}
