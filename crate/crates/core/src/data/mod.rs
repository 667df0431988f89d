//! Dataset ingestion, synthetic generation and train/test splits.

mod csv_io;
mod schema;
mod split;
mod synthetic;

pub use csv_io::{load_csv, read_csv, write_csv};
pub use schema::{quantile_thresholds, DatasetSchema, FeatureConfig, LabelMapping, SubscaleConfig};
pub use split::{split, Split, SplitConfig};
pub use synthetic::{generate_synthetic, Segment, SyntheticFeature, SyntheticSpec};

use crate::binarize::RawValue;
use crate::error::DataError;

/// Typed rows with 0/1 labels. Missing values are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<RawValue>>,
    pub labels: Vec<u8>,
}

impl RawDataset {
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<RawValue>>, labels: Vec<u8>) -> Result<Self, DataError> {
        if rows.len() != labels.len() {
            return Err(DataError::InvalidConfig(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != feature_names.len()) {
            return Err(DataError::InvalidConfig(format!(
                "row {i} has {} values, expected {}",
                rows[i].len(),
                feature_names.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(DataError::UnknownLabelValue {
                row: i,
                value: labels[i].to_string(),
            });
        }
        Ok(Self {
            feature_names,
            rows,
            labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn positive_rate(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.labels.iter().map(|&y| f64::from(y)).sum::<f64>() / self.labels.len() as f64
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.contains(&0) && self.labels.contains(&1)
    }

    /// Copies the given rows into a new dataset.
    pub fn subset(&self, indices: &[usize]) -> RawDataset {
        RawDataset {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}
