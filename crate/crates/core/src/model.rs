//! The two-layer additive risk model.
//!
//! First layer: each subscale `k` scores its own raw features with
//! step-function coefficients and maps the points through a sigmoid,
//! `r_k = σ(bias_k + Σ β·b)`. Second layer: `p = σ(γ₀ + Σ γ_k r_k)` with
//! `γ_k ≥ 0`, so non-negative threshold coefficients keep the whole model
//! monotone in every constrained feature.

use serde::{Deserialize, Serialize};

use crate::binarize::{Binarizer, FeatureSpec, RawValue};
use crate::bits::Bits;
use crate::error::ModelError;
use crate::importance::{variable_importance_bits, ImportanceGroup};

/// Logits are clamped to this magnitude before exponentiation.
pub const LOGIT_CLAMP: f64 = 36.0;

/// Probability cut-off for turning model output into a class label.
pub const LABEL_THRESHOLD: f64 = 0.5;

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    1.0 / (1.0 + (-z).exp())
}

/// A first-layer node over a subset of the raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subscale {
    pub name: String,
    /// Raw feature indices, in declaration order.
    pub features: Vec<usize>,
    /// One coefficient per original binary column of `features`, in the
    /// binarizer's column order.
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubscaleRisk {
    /// `bias + Σ β·b`.
    pub points: f64,
    /// `σ(points)`.
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscaleBreakdown {
    pub name: String,
    pub points: f64,
    pub risk: f64,
    pub weight: f64,
    /// `weight · risk`, the subscale's share of the final logit.
    pub weighted_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probability: f64,
    pub logit: f64,
    pub label: u8,
    pub subscales: Vec<SubscaleBreakdown>,
    pub important_factors: Vec<ImportanceGroup>,
}

impl Prediction {
    /// Recomputes the probability from the breakdown, in the same order
    /// `predict` sums it.
    pub fn recompute_probability(&self, second_layer_bias: f64) -> f64 {
        let mut logit = second_layer_bias;
        for s in &self.subscales {
            logit += s.weighted_score;
        }
        sigmoid(logit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmModel {
    binarizer: Binarizer,
    subscales: Vec<Subscale>,
    second_layer_weights: Vec<f64>,
    second_layer_bias: f64,
    // Original design-matrix columns of each subscale, aligned with its coefficients.
    columns: Vec<Vec<usize>>,
}

impl ArmModel {
    pub fn new(
        specs: Vec<FeatureSpec>,
        subscales: Vec<Subscale>,
        second_layer_weights: Vec<f64>,
        second_layer_bias: f64,
    ) -> Result<Self, ModelError> {
        let binarizer = Binarizer::new(specs)?;
        let columns = validate_partition(&binarizer, &subscales)?;
        if second_layer_weights.len() != subscales.len() {
            return Err(ModelError::InvalidModel(format!(
                "{} second-layer weights for {} subscales",
                second_layer_weights.len(),
                subscales.len()
            )));
        }
        if let Some(w) = second_layer_weights
            .iter()
            .find(|w| !w.is_finite() || **w < 0.0)
        {
            return Err(ModelError::InvalidModel(format!(
                "second-layer weight {w} must be finite and non-negative"
            )));
        }
        if !second_layer_bias.is_finite() {
            return Err(ModelError::InvalidModel("second-layer bias is not finite".into()));
        }
        for (s, cols) in subscales.iter().zip(&columns) {
            if !s.bias.is_finite() {
                return Err(ModelError::InvalidModel(format!("bias of `{}` is not finite", s.name)));
            }
            for (&beta, &j) in s.coefficients.iter().zip(cols) {
                if !beta.is_finite() {
                    return Err(ModelError::InvalidModel(format!(
                        "coefficient of `{}` is not finite",
                        binarizer.column_name(j)
                    )));
                }
                if binarizer.is_constrained(j) && beta < 0.0 {
                    return Err(ModelError::InvalidModel(format!(
                        "coefficient {beta} of monotone column `{}` is negative",
                        binarizer.column_name(j)
                    )));
                }
            }
        }
        Ok(Self {
            binarizer,
            subscales,
            second_layer_weights,
            second_layer_bias,
            columns,
        })
    }

    /// A model with every coefficient, weight and bias at zero.
    pub fn zeroed(
        specs: Vec<FeatureSpec>,
        partition: Vec<(String, Vec<usize>)>,
    ) -> Result<Self, ModelError> {
        let subscales: Vec<Subscale> = partition
            .into_iter()
            .map(|(name, features)| {
                let n: usize = features.iter().map(|&p| specs.get(p).map_or(0, |s| s.n_binary())).sum();
                Subscale {
                    name,
                    features,
                    coefficients: vec![0.0; n],
                    bias: 0.0,
                }
            })
            .collect();
        let k = subscales.len();
        Self::new(specs, subscales, vec![0.0; k], 0.0)
    }

    pub fn binarizer(&self) -> &Binarizer {
        &self.binarizer
    }

    pub fn specs(&self) -> &[FeatureSpec] {
        self.binarizer.specs()
    }

    pub fn subscales(&self) -> &[Subscale] {
        &self.subscales
    }

    pub fn subscale(&self, k: usize) -> &Subscale {
        &self.subscales[k]
    }

    pub fn n_subscales(&self) -> usize {
        self.subscales.len()
    }

    pub fn second_layer_weights(&self) -> &[f64] {
        &self.second_layer_weights
    }

    pub fn second_layer_bias(&self) -> f64 {
        self.second_layer_bias
    }

    /// Design-matrix columns of subscale `k`, aligned with its coefficients.
    pub fn subscale_columns(&self, k: usize) -> &[usize] {
        &self.columns[k]
    }

    /// Which of subscale `k`'s coefficients carry a non-negativity constraint.
    pub fn constrained_mask(&self, k: usize) -> Vec<bool> {
        self.columns[k]
            .iter()
            .map(|&j| self.binarizer.is_constrained(j))
            .collect()
    }

    /// Replaces all parameters, re-validating the constraints.
    pub fn with_parameters(
        &self,
        coefficients: Vec<(Vec<f64>, f64)>,
        second_layer_weights: Vec<f64>,
        second_layer_bias: f64,
    ) -> Result<Self, ModelError> {
        if coefficients.len() != self.subscales.len() {
            return Err(ModelError::InvalidModel("wrong number of subscales".into()));
        }
        let subscales = self
            .subscales
            .iter()
            .zip(coefficients)
            .map(|(s, (coefficients, bias))| Subscale {
                name: s.name.clone(),
                features: s.features.clone(),
                coefficients,
                bias,
            })
            .collect();
        Self::new(
            self.specs().to_vec(),
            subscales,
            second_layer_weights,
            second_layer_bias,
        )
    }

    pub fn binarize(&self, raw: &[RawValue]) -> Result<Bits, ModelError> {
        self.binarizer.binarize_row(raw)
    }

    /// Points and risk of subscale `k` on a binarized row.
    pub fn subscale_risk(&self, k: usize, row: &Bits) -> SubscaleRisk {
        let s = &self.subscales[k];
        let mut points = s.bias;
        for (&beta, &j) in s.coefficients.iter().zip(&self.columns[k]) {
            if row.get(j) {
                points += beta;
            }
        }
        SubscaleRisk {
            points,
            risk: sigmoid(points),
        }
    }

    /// `f_p(v) = Σ_l β_{p,l} b_{p,l}(v)` for raw feature `feature` of subscale `k`,
    /// summed in column order.
    pub fn feature_points(&self, k: usize, feature: usize, raw: RawValue) -> Result<f64, ModelError> {
        let offset = self.coefficient_offset(k, feature)?;
        let spec = &self.specs()[feature];
        let s = &self.subscales[k];
        let mut total = 0.0;
        for (l, kind) in spec.binary_kinds().iter().enumerate() {
            if kind.evaluate(spec, raw) {
                total += s.coefficients[offset + l];
            }
        }
        Ok(total)
    }

    /// Position of `feature`'s first coefficient within subscale `k`.
    pub fn coefficient_offset(&self, k: usize, feature: usize) -> Result<usize, ModelError> {
        let s = &self.subscales[k];
        let mut offset = 0;
        for &p in &s.features {
            if p == feature {
                return Ok(offset);
            }
            offset += self.specs()[p].n_binary();
        }
        Err(ModelError::FeatureNotInSubscale {
            feature: self
                .specs()
                .get(feature)
                .map_or_else(|| format!("#{feature}"), |s| s.name.clone()),
            subscale: s.name.clone(),
        })
    }

    /// Final logit and probability, without the breakdown.
    pub fn probability_bits(&self, row: &Bits) -> f64 {
        let mut logit = self.second_layer_bias;
        for (k, &w) in self.second_layer_weights.iter().enumerate() {
            logit += w * self.subscale_risk(k, row).risk;
        }
        sigmoid(logit)
    }

    pub fn label_bits(&self, row: &Bits) -> u8 {
        u8::from(self.probability_bits(row) >= LABEL_THRESHOLD)
    }

    pub fn breakdown_bits(&self, row: &Bits) -> Vec<SubscaleBreakdown> {
        self.subscales
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let SubscaleRisk { points, risk } = self.subscale_risk(k, row);
                let weight = self.second_layer_weights[k];
                SubscaleBreakdown {
                    name: s.name.clone(),
                    points,
                    risk,
                    weight,
                    weighted_score: weight * risk,
                }
            })
            .collect()
    }

    pub fn predict_bits(&self, row: &Bits) -> Prediction {
        let subscales = self.breakdown_bits(row);
        let mut logit = self.second_layer_bias;
        for s in &subscales {
            logit += s.weighted_score;
        }
        let probability = sigmoid(logit);
        Prediction {
            probability,
            logit,
            label: u8::from(probability >= LABEL_THRESHOLD),
            important_factors: variable_importance_bits(self, row, 2, 2),
            subscales,
        }
    }

    /// Probability with the full per-subscale decomposition and the top
    /// two factors of the top two subscales.
    pub fn predict(&self, raw: &[RawValue]) -> Result<Prediction, ModelError> {
        Ok(self.predict_bits(&self.binarize(raw)?))
    }

    pub fn labels(&self, rows: &[Bits]) -> Vec<u8> {
        rows.iter().map(|r| self.label_bits(r)).collect()
    }
}

fn validate_partition(
    binarizer: &Binarizer,
    subscales: &[Subscale],
) -> Result<Vec<Vec<usize>>, ModelError> {
    let p = binarizer.n_features();
    let mut owner = vec![None; p];
    let mut columns = Vec::with_capacity(subscales.len());
    for (k, s) in subscales.iter().enumerate() {
        let mut cols = Vec::new();
        for &f in &s.features {
            if f >= p {
                return Err(ModelError::InvalidModel(format!(
                    "subscale `{}` references unknown feature #{f}",
                    s.name
                )));
            }
            if let Some(other) = owner[f] {
                return Err(ModelError::InvalidModel(format!(
                    "feature `{}` belongs to subscales #{other} and #{k}",
                    binarizer.specs()[f].name
                )));
            }
            owner[f] = Some(k);
            cols.extend(binarizer.columns_of(f));
        }
        if cols.len() != s.coefficients.len() {
            return Err(ModelError::InvalidModel(format!(
                "subscale `{}` has {} coefficients for {} binary features",
                s.name,
                s.coefficients.len(),
                cols.len()
            )));
        }
        columns.push(cols);
    }
    if let Some(f) = owner.iter().position(Option::is_none) {
        return Err(ModelError::InvalidModel(format!(
            "feature `{}` is not assigned to any subscale",
            binarizer.specs()[f].name
        )));
    }
    Ok(columns)
}
