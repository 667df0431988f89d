//! Versioned JSON model documents.
//!
//! Floats are written in shortest round-trip form, which reproduces every
//! coefficient bit for bit on load.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::binarize::FeatureSpec;
use crate::error::ModelError;
use crate::model::{ArmModel, Subscale};

pub const MODEL_FORMAT: &str = "arm-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscaleDocument {
    pub name: String,
    /// Raw feature names.
    pub features: Vec<String>,
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondLayerDocument {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub features: Vec<FeatureSpec>,
    pub subscales: Vec<SubscaleDocument>,
    pub second_layer: SecondLayerDocument,
}

impl From<&ArmModel> for ModelDocument {
    fn from(model: &ArmModel) -> Self {
        let specs = model.specs();
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            features: specs.to_vec(),
            subscales: model
                .subscales()
                .iter()
                .map(|s| SubscaleDocument {
                    name: s.name.clone(),
                    features: s.features.iter().map(|&p| specs[p].name.clone()).collect(),
                    coefficients: s.coefficients.clone(),
                    bias: s.bias,
                })
                .collect(),
            second_layer: SecondLayerDocument {
                weights: model.second_layer_weights().to_vec(),
                bias: model.second_layer_bias(),
            },
        }
    }
}

impl ModelDocument {
    pub fn into_model(self) -> Result<ArmModel, ModelError> {
        if self.format != MODEL_FORMAT {
            return Err(ModelError::MalformedDocument(format!(
                "unexpected format `{}`",
                self.format
            )));
        }
        if self.version != MODEL_VERSION {
            return Err(ModelError::SchemaVersionMismatch {
                expected: MODEL_VERSION,
                found: self.version,
            });
        }
        let index = |name: &str| {
            self.features
                .iter()
                .position(|f| f.name == name)
                .ok_or_else(|| ModelError::MalformedDocument(format!("unknown feature `{name}`")))
        };
        let subscales = self
            .subscales
            .iter()
            .map(|s| {
                Ok(Subscale {
                    name: s.name.clone(),
                    features: s.features.iter().map(|n| index(n)).collect::<Result<_, _>>()?,
                    coefficients: s.coefficients.clone(),
                    bias: s.bias,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        ArmModel::new(
            self.features,
            subscales,
            self.second_layer.weights,
            self.second_layer.bias,
        )
    }
}

pub fn serialize_model(model: &ArmModel) -> String {
    serde_json::to_string_pretty(&ModelDocument::from(model)).expect("model documents serialize")
}

pub fn deserialize_model(document: &str) -> Result<ArmModel, ModelError> {
    // Check the version before the full shape so old documents report a
    // version mismatch rather than a parse error.
    let value: serde_json::Value = serde_json::from_str(document)
        .map_err(|e| ModelError::MalformedDocument(e.to_string()))?;
    if let Some(v) = value.get("version").and_then(|v| v.as_u64()) {
        if v != u64::from(MODEL_VERSION) {
            return Err(ModelError::SchemaVersionMismatch {
                expected: MODEL_VERSION,
                found: u32::try_from(v).unwrap_or(u32::MAX),
            });
        }
    }
    let doc: ModelDocument =
        serde_json::from_value(value).map_err(|e| ModelError::MalformedDocument(e.to_string()))?;
    doc.into_model()
}

/// Hex SHA-256 of the canonical model document.
pub fn model_hash(model: &ArmModel) -> String {
    let json = serde_json::to_string(&ModelDocument::from(model)).expect("model documents serialize");
    hex::encode(Sha256::digest(json.as_bytes()))
}
