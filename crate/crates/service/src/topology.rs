//! The `/model` document: features, binary columns, subscales with their
//! coefficients and scoring tables, and the second layer.

use arm_core::{ArmModel, Monotonicity, SubscaleTable};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct ColumnInfo {
    pub column: usize,
    pub name: String,
    /// Sign-constrained to be non-negative.
    pub constrained: bool,
}

#[derive(Debug, Serialize)]
pub struct FeatureInfo {
    pub name: String,
    pub monotonicity: Monotonicity,
    pub thresholds: Vec<f64>,
    pub missing_codes: Vec<f64>,
    pub subscale: usize,
    pub columns: Vec<ColumnInfo>,
}

#[derive(Debug, Serialize)]
pub struct CoefficientInfo {
    pub column: usize,
    pub description: String,
    pub coefficient: f64,
}

#[derive(Debug, Serialize)]
pub struct SubscaleInfo {
    pub index: usize,
    pub name: String,
    pub features: Vec<String>,
    pub bias: f64,
    pub weight: f64,
    pub coefficients: Vec<CoefficientInfo>,
    pub scoring: SubscaleTable,
}

#[derive(Debug, Serialize)]
pub struct SecondLayerInfo {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Serialize)]
pub struct ModelTopology {
    pub model_hash: String,
    pub n_features: usize,
    pub n_subscales: usize,
    pub n_columns: usize,
    pub features: Vec<FeatureInfo>,
    pub subscales: Vec<SubscaleInfo>,
    pub second_layer: SecondLayerInfo,
}

impl ModelTopology {
    pub fn new(model: &ArmModel, hash: &str) -> Self {
        let binarizer = model.binarizer();
        let mut owner = vec![0; model.specs().len()];
        for (k, s) in model.subscales().iter().enumerate() {
            for &p in &s.features {
                owner[p] = k;
            }
        }
        let features = model
            .specs()
            .iter()
            .enumerate()
            .map(|(p, spec)| FeatureInfo {
                name: spec.name.clone(),
                monotonicity: spec.monotonicity,
                thresholds: spec.thresholds.clone(),
                missing_codes: spec.missing_codes.clone(),
                subscale: owner[p],
                columns: binarizer
                    .columns_of(p)
                    .map(|j| ColumnInfo {
                        column: j,
                        name: binarizer.column_name(j),
                        constrained: binarizer.is_constrained(j),
                    })
                    .collect(),
            })
            .collect();
        let subscales = model
            .subscales()
            .iter()
            .enumerate()
            .map(|(k, s)| SubscaleInfo {
                index: k,
                name: s.name.clone(),
                features: s.features.iter().map(|&p| model.specs()[p].name.clone()).collect(),
                bias: s.bias,
                weight: model.second_layer_weights()[k],
                coefficients: s
                    .coefficients
                    .iter()
                    .zip(model.subscale_columns(k))
                    .map(|(&coefficient, &column)| CoefficientInfo {
                        column,
                        description: binarizer.column_name(column),
                        coefficient,
                    })
                    .collect(),
                scoring: SubscaleTable::for_subscale(model, k),
            })
            .collect();
        Self {
            model_hash: hash.to_string(),
            n_features: model.specs().len(),
            n_subscales: model.n_subscales(),
            n_columns: binarizer.n_columns(),
            features,
            subscales,
            second_layer: SecondLayerInfo {
                weights: model.second_layer_weights().to_vec(),
                bias: model.second_layer_bias(),
            },
        }
    }
}
