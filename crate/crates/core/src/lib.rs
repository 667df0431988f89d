//! Two-layer additive risk model: binarization, scoring tables, prediction
//! with full decomposition, training and data handling.

pub mod binarize;
pub mod bits;
pub mod data;
pub mod document;
pub mod error;
pub mod fixtures;
pub mod importance;
pub mod model;
pub mod scoring;
pub mod train;

pub use binarize::{
    binarize_dataset, binarize_value, BinarizedMatrix, Binarizer, BinaryFeature, BinaryKind, FeatureSpec,
    Monotonicity, RawValue,
};
pub use bits::Bits;
pub use document::{deserialize_model, model_hash, serialize_model, ModelDocument};
pub use error::{DataError, ModelError, TrainError};
pub use importance::{variable_importance, ImportanceGroup, ImportantFactor};
pub use model::{sigmoid, ArmModel, Prediction, Subscale, SubscaleBreakdown, SubscaleRisk};
pub use scoring::{to_scoring_table, ScoringTable, SubscaleTable};
pub use train::{evaluate, fit_model, train_model, EvalReport, FitReport, TrainConfig};
