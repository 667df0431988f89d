//! Synthetic credit data with known monotone structure.
//!
//! Every feature has a piecewise-uniform marginal. Features share a latent
//! creditworthiness factor through a Gaussian copula, loaded in each
//! feature's monotone direction. The label is Bernoulli with a logit that is
//! a sum of per-feature saturating terms `±effect · tanh((x − pivot) / scale)`
//! whose signs follow the declared monotone directions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::binarize::Monotonicity;
use crate::data::{DatasetSchema, RawDataset};
use crate::error::DataError;
use crate::model::sigmoid;

const MAX_ATTEMPTS: usize = 10;

/// Uniform piece `[lo, hi)` of a marginal with relative weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFeature {
    pub name: String,
    pub monotonicity: Monotonicity,
    pub segments: Vec<Segment>,
    /// Round draws down to integers.
    #[serde(default)]
    pub integer: bool,
    /// Logit magnitude of the feature's term.
    pub effect: f64,
    pub pivot: f64,
    pub scale: f64,
    /// Overrides the spec-wide missingness rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing_rate: Option<f64>,
}

impl SyntheticFeature {
    /// Value at cumulative probability `u` of the marginal.
    pub fn quantile(&self, u: f64) -> f64 {
        // Segments are half-open, so draws stay below `hi`.
        let below_hi = |s: &Segment| s.hi.next_down();
        let total: f64 = self.segments.iter().map(|s| s.weight).sum();
        let mut target = u.clamp(0.0, 1.0) * total;
        for s in &self.segments {
            if target < s.weight {
                return (s.lo + (s.hi - s.lo) * target / s.weight).min(below_hi(s));
            }
            target -= s.weight;
        }
        below_hi(self.segments.last().expect("validated marginal"))
    }

    /// Logit contribution of a non-missing value.
    pub fn logit_term(&self, x: f64) -> f64 {
        let u = ((x - self.pivot) / self.scale).tanh();
        match self.monotonicity {
            Monotonicity::Increasing => self.effect * u,
            Monotonicity::Decreasing => -self.effect * u,
            Monotonicity::None => self.effect * (1.0 - 2.0 * u * u),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n: usize,
    pub seed: u64,
    pub intercept: f64,
    pub missing_rate: f64,
    /// Correlation of each monotone feature's copula score with the latent
    /// factor; 0 draws features independently.
    pub latent_loading: f64,
    pub features: Vec<SyntheticFeature>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self::fico_like(10_459, 1)
    }
}

fn seg(lo: f64, hi: f64, weight: f64) -> Segment {
    Segment { lo, hi, weight }
}

impl SyntheticSpec {
    /// Marginals and monotone directions modelled on the HELOC features.
    pub fn fico_like(n: usize, seed: u64) -> Self {
        use Monotonicity::{Decreasing as D, Increasing as I, None as N};
        #[rustfmt::skip]
        let table: Vec<(&str, Monotonicity, Vec<Segment>, f64, f64, f64, Option<f64>)> = vec![
            ("ExternalRiskEstimate", D, vec![seg(40.0, 60.0, 0.15), seg(60.0, 75.0, 0.45), seg(75.0, 95.0, 0.40)], 0.8, 71.0, 8.0, Some(0.01)),
            ("MSinceOldestTradeOpen", D, vec![seg(2.0, 100.0, 0.2), seg(100.0, 300.0, 0.6), seg(300.0, 600.0, 0.2)], 0.175, 180.0, 90.0, None),
            ("MSinceMostRecentTradeOpen", D, vec![seg(0.0, 12.0, 0.6), seg(12.0, 40.0, 0.3), seg(40.0, 200.0, 0.1)], 0.15, 8.0, 10.0, None),
            ("AverageMInFile", D, vec![seg(4.0, 50.0, 0.25), seg(50.0, 100.0, 0.5), seg(100.0, 250.0, 0.25)], 0.25, 75.0, 30.0, None),
            ("NumSatisfactoryTrades", D, vec![seg(0.0, 10.0, 0.2), seg(10.0, 30.0, 0.6), seg(30.0, 70.0, 0.2)], 0.175, 20.0, 10.0, None),
            ("NumTrades60Ever2DerogPubRec", I, vec![seg(0.0, 1.0, 0.7), seg(1.0, 3.0, 0.2), seg(3.0, 10.0, 0.1)], 0.15, 0.5, 1.5, None),
            ("NumTrades90Ever2DerogPubRec", I, vec![seg(0.0, 1.0, 0.8), seg(1.0, 3.0, 0.15), seg(3.0, 8.0, 0.05)], 0.15, 0.5, 1.5, None),
            ("PercentTradesNeverDelq", D, vec![seg(50.0, 85.0, 0.15), seg(85.0, 100.0, 0.35), seg(100.0, 101.0, 0.5)], 0.3, 93.0, 7.0, None),
            ("MSinceMostRecentDelq", D, vec![seg(0.0, 12.0, 0.3), seg(12.0, 40.0, 0.4), seg(40.0, 84.0, 0.3)], 0.175, 24.0, 15.0, Some(0.45)),
            ("MaxDelq2PublicRecLast12M", D, vec![seg(0.0, 5.0, 0.15), seg(5.0, 7.0, 0.3), seg(7.0, 8.0, 0.55)], 0.25, 5.5, 1.5, None),
            ("MaxDelqEver", D, vec![seg(2.0, 6.0, 0.3), seg(6.0, 9.0, 0.7)], 0.15, 5.5, 1.5, None),
            ("NumTotalTrades", N, vec![seg(0.0, 10.0, 0.2), seg(10.0, 30.0, 0.6), seg(30.0, 80.0, 0.2)], 0.05, 22.0, 15.0, None),
            ("NumTradesOpeninLast12M", I, vec![seg(0.0, 2.0, 0.5), seg(2.0, 4.0, 0.35), seg(4.0, 12.0, 0.15)], 0.15, 2.0, 2.0, None),
            ("PercentInstallTrades", N, vec![seg(0.0, 20.0, 0.3), seg(20.0, 50.0, 0.5), seg(50.0, 100.0, 0.2)], 0.05, 33.0, 20.0, None),
            ("MSinceMostRecentInqexcl7days", D, vec![seg(0.0, 1.0, 0.5), seg(1.0, 6.0, 0.3), seg(6.0, 25.0, 0.2)], 0.175, 1.0, 3.0, Some(0.05)),
            ("NumInqLast6M", I, vec![seg(0.0, 1.0, 0.4), seg(1.0, 3.0, 0.4), seg(3.0, 15.0, 0.2)], 0.175, 1.5, 2.0, None),
            ("NumInqLast6Mexcl7days", I, vec![seg(0.0, 1.0, 0.45), seg(1.0, 3.0, 0.4), seg(3.0, 12.0, 0.15)], 0.15, 1.5, 2.0, None),
            ("NetFractionRevolvingBurden", I, vec![seg(0.0, 20.0, 0.35), seg(20.0, 60.0, 0.4), seg(60.0, 120.0, 0.25)], 0.4, 35.0, 25.0, Some(0.02)),
            ("NetFractionInstallBurden", I, vec![seg(0.0, 50.0, 0.3), seg(50.0, 90.0, 0.5), seg(90.0, 150.0, 0.2)], 0.15, 65.0, 25.0, Some(0.3)),
            ("NumRevolvingTradesWBalance", N, vec![seg(0.0, 3.0, 0.3), seg(3.0, 8.0, 0.5), seg(8.0, 25.0, 0.2)], 0.05, 4.0, 3.0, None),
            ("NumInstallTradesWBalance", N, vec![seg(0.0, 2.0, 0.4), seg(2.0, 5.0, 0.45), seg(5.0, 15.0, 0.15)], 0.05, 2.0, 2.0, None),
            ("NumBank2NatlTradesWHighUtilization", I, vec![seg(0.0, 1.0, 0.35), seg(1.0, 3.0, 0.4), seg(3.0, 10.0, 0.25)], 0.175, 1.5, 1.5, None),
            ("PercentTradesWBalance", N, vec![seg(0.0, 50.0, 0.2), seg(50.0, 80.0, 0.4), seg(80.0, 101.0, 0.4)], 0.05, 70.0, 20.0, None),
        ];
        let features = table
            .into_iter()
            .map(|(name, monotonicity, segments, effect, pivot, scale, missing_rate)| SyntheticFeature {
                name: name.to_string(),
                monotonicity,
                segments,
                integer: true,
                effect,
                pivot,
                scale,
                missing_rate,
            })
            .collect();
        Self {
            n,
            seed,
            // Centres the default rate near one half.
            intercept: 0.37,
            missing_rate: 0.0,
            latent_loading: 0.6,
            features,
        }
    }

    /// Same features with every missingness rate set to zero.
    pub fn without_missing(mut self) -> Self {
        self.missing_rate = 0.0;
        for f in &mut self.features {
            f.missing_rate = None;
        }
        self
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |msg: String| Err(DataError::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.missing_rate) {
            return bad(format!("missing_rate {} outside [0, 1]", self.missing_rate));
        }
        if !(0.0..1.0).contains(&self.latent_loading) {
            return bad(format!("latent_loading {} outside [0, 1)", self.latent_loading));
        }
        for f in &self.features {
            if f.segments.is_empty() || f.segments.iter().any(|s| !(s.hi > s.lo) || !(s.weight > 0.0)) {
                return bad(format!("feature `{}` has an invalid marginal", f.name));
            }
            if !(f.scale > 0.0) || !f.effect.is_finite() || f.effect < 0.0 {
                return bad(format!("feature `{}` needs effect ≥ 0 and scale > 0", f.name));
            }
            if let Some(r) = f.missing_rate {
                if !(0.0..=1.0).contains(&r) {
                    return bad(format!("feature `{}` missing_rate {r} outside [0, 1]", f.name));
                }
            }
        }
        Ok(())
    }

    /// Schema matching this spec's columns, with one subscale per feature
    /// unless the FICO partition applies.
    pub fn schema(&self) -> DatasetSchema {
        let fico = DatasetSchema::fico();
        let names: Vec<&str> = self.features.iter().map(|f| f.name.as_str()).collect();
        let mut schema = fico.clone();
        schema.features = self
            .features
            .iter()
            .map(|f| crate::data::FeatureConfig {
                name: f.name.clone(),
                monotonicity: f.monotonicity,
                missing_codes: None,
                thresholds: None,
                include_not_missing_indicator: true,
            })
            .collect();
        let same_features = fico.features.len() == names.len()
            && fico.features.iter().all(|f| names.contains(&f.name.as_str()));
        if !same_features {
            schema.subscales = self
                .features
                .iter()
                .map(|f| crate::data::SubscaleConfig {
                    name: f.name.clone(),
                    features: vec![f.name.clone()],
                })
                .collect();
        }
        schema
    }

    fn draw(&self, seed: u64) -> RawDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = self.latent_loading;
        let idiosyncratic = (1.0 - rho * rho).sqrt();
        let mut rows = Vec::with_capacity(self.n);
        let mut labels = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let credit: f64 = rng.sample(StandardNormal);
            let mut logit = self.intercept;
            let row: Vec<Option<f64>> = self
                .features
                .iter()
                .map(|f| {
                    let rate = f.missing_rate.unwrap_or(self.missing_rate);
                    let missing = rng.gen::<f64>() < rate;
                    let direction = match f.monotonicity {
                        Monotonicity::Decreasing => 1.0,
                        Monotonicity::Increasing => -1.0,
                        Monotonicity::None => 0.0,
                    };
                    let noise: f64 = rng.sample(StandardNormal);
                    let score = if direction == 0.0 {
                        noise
                    } else {
                        rho * direction * credit + idiosyncratic * noise
                    };
                    let mut x = f.quantile(normal_cdf(score));
                    if f.integer {
                        x = x.floor();
                    }
                    if missing {
                        None
                    } else {
                        logit += f.logit_term(x);
                        Some(x)
                    }
                })
                .collect();
            labels.push(u8::from(rng.gen::<f64>() < sigmoid(logit)));
            rows.push(row);
        }
        RawDataset {
            feature_names: self.features.iter().map(|f| f.name.clone()).collect(),
            rows,
            labels,
        }
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Draws a dataset; deterministic in `spec.seed`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<RawDataset, DataError> {
    spec.validate()?;
    for attempt in 0..MAX_ATTEMPTS {
        let data = spec.draw(spec.seed.wrapping_add(attempt as u64));
        if data.has_both_classes() {
            return Ok(data);
        }
    }
    Err(DataError::DegenerateSpec(MAX_ATTEMPTS))
}
