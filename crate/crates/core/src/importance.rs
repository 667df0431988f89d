//! Per-observation variable importance.
//!
//! Subscales are ranked by their weighted output `γ_k · r_k`; within each
//! selected subscale, active binary features are ranked by `β · b`. Both
//! sorts are stable, so ties keep declaration order.

use serde::{Deserialize, Serialize};

use crate::binarize::RawValue;
use crate::bits::Bits;
use crate::error::ModelError;
use crate::model::ArmModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportantFactor {
    /// Design-matrix column of the binary feature.
    pub column: usize,
    pub description: String,
    /// `β · b` for the active feature.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceGroup {
    pub subscale: usize,
    pub name: String,
    pub points: f64,
    pub weighted_score: f64,
    pub factors: Vec<ImportantFactor>,
}

/// Top `n_subscales` subscales and, within each, the top `n_factors`
/// positively contributing active features.
pub fn variable_importance(
    model: &ArmModel,
    raw: &[RawValue],
    n_subscales: usize,
    n_factors: usize,
) -> Result<Vec<ImportanceGroup>, ModelError> {
    Ok(variable_importance_bits(
        model,
        &model.binarize(raw)?,
        n_subscales,
        n_factors,
    ))
}

pub fn variable_importance_bits(
    model: &ArmModel,
    row: &Bits,
    n_subscales: usize,
    n_factors: usize,
) -> Vec<ImportanceGroup> {
    let mut ranked: Vec<(usize, f64, f64)> = (0..model.n_subscales())
        .map(|k| {
            let r = model.subscale_risk(k, row);
            (k, r.points, model.second_layer_weights()[k] * r.risk)
        })
        .collect();
    ranked.sort_by(|a, b| b.2.total_cmp(&a.2));

    ranked
        .into_iter()
        .take(n_subscales)
        .map(|(k, points, weighted_score)| {
            let s = model.subscale(k);
            let mut factors: Vec<ImportantFactor> = s
                .coefficients
                .iter()
                .zip(model.subscale_columns(k))
                .filter(|&(&beta, &j)| row.get(j) && beta > 0.0)
                .map(|(&beta, &j)| ImportantFactor {
                    column: j,
                    description: model.binarizer().column_name(j),
                    contribution: beta,
                })
                .collect();
            factors.sort_by(|a, b| b.contribution.total_cmp(&a.contribution));
            factors.truncate(n_factors);
            ImportanceGroup {
                subscale: k,
                name: s.name.clone(),
                points,
                weighted_score,
                factors,
            }
        })
        .collect()
}
