use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

use crate::binarize::{FeatureSpec, Monotonicity};
use crate::data::RawDataset;
use crate::error::DataError;
use crate::model::ArmModel;

const FICO_SCHEMA: &str = include_str!("../../config/fico_schema.json");

/// How the label column's strings map onto {0, 1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMapping {
    pub column: String,
    /// Values mapped to 1 (e.g. "Bad"). The first entry is used when writing.
    pub positive: Vec<String>,
    /// Values mapped to 0 (e.g. "Good"). The first entry is used when writing.
    pub negative: Vec<String>,
}

impl LabelMapping {
    pub fn parse(&self, raw: &str) -> Option<u8> {
        let raw = raw.trim();
        if self.positive.iter().any(|p| p.eq_ignore_ascii_case(raw)) {
            Some(1)
        } else if self.negative.iter().any(|n| n.eq_ignore_ascii_case(raw)) {
            Some(0)
        } else {
            None
        }
    }

    pub fn render(&self, label: u8) -> &str {
        if label == 1 {
            self.positive.first().map_or("1", String::as_str)
        } else {
            self.negative.first().map_or("0", String::as_str)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub name: String,
    pub monotonicity: Monotonicity,
    /// Overrides the schema-wide missing codes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing_codes: Option<Vec<f64>>,
    /// Fixed cut points; when absent they are fitted from training quantiles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
    #[serde(default = "default_true")]
    pub include_not_missing_indicator: bool,
}

fn default_true() -> bool {
    true
}

fn default_quantiles() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscaleConfig {
    pub name: String,
    pub features: Vec<String>,
}

/// Column layout, label mapping, monotone directions and subscale partition
/// of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub label: LabelMapping,
    #[serde(default)]
    pub default_missing_codes: Vec<f64>,
    /// Number of quantile bins used to place fitted thresholds.
    #[serde(default = "default_quantiles")]
    pub threshold_quantiles: usize,
    pub features: Vec<FeatureConfig>,
    pub subscales: Vec<SubscaleConfig>,
}

impl Default for DatasetSchema {
    fn default() -> Self {
        Self::fico()
    }
}

impl DatasetSchema {
    /// The 23-feature HELOC layout with its 10-subscale partition.
    pub fn fico() -> Self {
        serde_json::from_str(FICO_SCHEMA).expect("bundled schema parses")
    }

    pub fn from_json(json: &str) -> Result<Self, DataError> {
        let schema: Self = serde_json::from_str(json)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let mut names = HashSet::new();
        for f in &self.features {
            if !names.insert(f.name.as_str()) {
                return Err(DataError::InvalidConfig(format!("duplicate feature `{}`", f.name)));
            }
        }
        if names.contains(self.label.column.as_str()) {
            return Err(DataError::InvalidConfig("label column is also a feature".into()));
        }
        let mut assigned = HashSet::new();
        for s in &self.subscales {
            for f in &s.features {
                if !names.contains(f.as_str()) {
                    return Err(DataError::InvalidConfig(format!(
                        "subscale `{}` references unknown feature `{f}`",
                        s.name
                    )));
                }
                if !assigned.insert(f.as_str()) {
                    return Err(DataError::InvalidConfig(format!(
                        "feature `{f}` assigned to more than one subscale"
                    )));
                }
            }
        }
        if let Some(f) = self.features.iter().find(|f| !assigned.contains(f.name.as_str())) {
            return Err(DataError::InvalidConfig(format!(
                "feature `{}` is not assigned to a subscale",
                f.name
            )));
        }
        if self.threshold_quantiles < 2 {
            return Err(DataError::InvalidConfig("threshold_quantiles must be at least 2".into()));
        }
        Ok(())
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn missing_codes(&self, p: usize) -> &[f64] {
        self.features[p]
            .missing_codes
            .as_deref()
            .unwrap_or(&self.default_missing_codes)
    }

    /// The layout of a fitted model: its features with their fixed
    /// thresholds and missing codes, and its partition.
    pub fn from_model(model: &ArmModel, label: LabelMapping) -> Self {
        Self {
            label,
            default_missing_codes: Vec::new(),
            threshold_quantiles: default_quantiles(),
            features: model
                .specs()
                .iter()
                .map(|s| FeatureConfig {
                    name: s.name.clone(),
                    monotonicity: s.monotonicity,
                    missing_codes: Some(s.missing_codes.clone()),
                    thresholds: Some(s.thresholds.clone()),
                    include_not_missing_indicator: s.include_not_missing_indicator,
                })
                .collect(),
            subscales: model
                .subscales()
                .iter()
                .map(|k| SubscaleConfig {
                    name: k.name.clone(),
                    features: k.features.iter().map(|&p| model.specs()[p].name.clone()).collect(),
                })
                .collect(),
        }
    }

    /// Subscales as raw feature indices.
    pub fn partition(&self) -> Vec<(String, Vec<usize>)> {
        self.subscales
            .iter()
            .map(|s| {
                let idx = s
                    .features
                    .iter()
                    .map(|n| self.features.iter().position(|f| &f.name == n).expect("validated"))
                    .collect();
                (s.name.clone(), idx)
            })
            .collect()
    }

    /// Feature specs with thresholds taken from the config or, when absent,
    /// from quantiles of the non-missing values in `rows` of `data`.
    pub fn feature_specs(&self, data: &RawDataset, rows: Option<&[usize]>) -> Vec<FeatureSpec> {
        self.features
            .iter()
            .enumerate()
            .map(|(p, f)| {
                let missing_codes = self.missing_codes(p).to_vec();
                let thresholds = match &f.thresholds {
                    Some(t) => t.clone(),
                    None => {
                        let mut values: Vec<f64> = match rows {
                            Some(idx) => idx.iter().filter_map(|&i| data.rows[i][p]).collect(),
                            None => data.rows.iter().filter_map(|r| r[p]).collect(),
                        };
                        values.retain(|v| !v.is_nan() && !missing_codes.contains(v));
                        quantile_thresholds(&mut values, f.monotonicity, self.threshold_quantiles)
                    }
                };
                FeatureSpec {
                    name: f.name.clone(),
                    monotonicity: f.monotonicity,
                    thresholds,
                    missing_codes,
                    include_not_missing_indicator: f.include_not_missing_indicator,
                }
            })
            .collect()
    }
}

/// Empirical `1/q, …, (q−1)/q` quantiles (lower nearest rank), deduplicated.
///
/// Cut points that no observed value can fall on the active side of are
/// dropped: the minimum for `1[x < t]`, the maximum for `1[x > t]`.
pub fn quantile_thresholds(values: &mut [f64], monotonicity: Monotonicity, q: usize) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let (min, max) = (values[0], values[n - 1]);
    let mut out: Vec<f64> = (1..q).map(|j| values[(j * n / q).min(n - 1)]).collect();
    out.dedup();
    match monotonicity {
        Monotonicity::Increasing => out.retain(|&t| t < max),
        Monotonicity::Decreasing | Monotonicity::None => out.retain(|&t| t > min),
    }
    out
}
