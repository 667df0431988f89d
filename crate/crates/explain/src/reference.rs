//! The labelled dataset that rules are checked against.

use arm_core::data::RawDataset;
use arm_core::{ArmModel, BinarizedMatrix, Bits, DataError, RawValue};
use sha2::{Digest, Sha256};

use crate::error::ExplainError;

/// Raw rows in model feature order, their binarization under the model,
/// and the model's labels for them.
#[derive(Debug, Clone)]
pub struct ReferenceData {
    rows: Vec<Vec<RawValue>>,
    matrix: BinarizedMatrix,
    model_labels: Vec<u8>,
    hash: String,
}

impl ReferenceData {
    /// Columns of `data` are matched to the model's features by name.
    pub fn new(model: &ArmModel, data: &RawDataset) -> Result<Self, ExplainError> {
        let order = model
            .specs()
            .iter()
            .map(|s| {
                data.feature_index(&s.name)
                    .ok_or_else(|| DataError::MissingColumn(s.name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let rows: Vec<Vec<RawValue>> = data
            .rows
            .iter()
            .map(|r| order.iter().map(|&c| r[c]).collect())
            .collect();
        let matrix = model.binarizer().binarize_rows(&rows)?;
        let model_labels = model.labels(matrix.rows());
        let hash = hex::encode(Sha256::digest(matrix.content_bytes()));
        Ok(Self {
            rows,
            matrix,
            model_labels,
            hash,
        })
    }

    pub fn rows(&self) -> &[Vec<RawValue>] {
        &self.rows
    }

    pub fn matrix(&self) -> &BinarizedMatrix {
        &self.matrix
    }

    pub fn model_labels(&self) -> &[u8] {
        &self.model_labels
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Hex SHA-256 of the binarized rows.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Lowest row index whose raw values equal `raw` exactly.
    pub fn find_row(&self, raw: &[RawValue]) -> Option<usize> {
        self.rows.iter().position(|r| r.as_slice() == raw)
    }

    /// Lowest row index with binarized pattern `x`.
    pub fn find_pattern(&self, x: &Bits) -> Option<usize> {
        self.matrix.rows().iter().position(|r| r == x)
    }
}
