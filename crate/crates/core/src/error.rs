use thiserror::Error;

/// Errors raised while building, evaluating or (de)serializing a model.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("row has {found} values, expected {expected}")]
    ColumnCountMismatch { expected: usize, found: usize },
    #[error("feature `{feature}` is not part of subscale `{subscale}`")]
    FeatureNotInSubscale { feature: String, subscale: String },
    #[error("invalid feature spec `{feature}`: {reason}")]
    InvalidSpec { feature: String, reason: String },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unsupported model document version {found} (expected {expected})")]
    SchemaVersionMismatch { expected: u32, found: u32 },
    #[error("malformed model document: {0}")]
    MalformedDocument(String),
}

/// Errors from loading, generating or splitting datasets.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("cannot parse value {value:?} at row {row}, column `{column}`")]
    UnparsableValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("unknown label value {value:?} at row {row}")]
    UnknownLabelValue { row: usize, value: String },
    #[error("dataset contains a single class")]
    SingleClassDataset,
    #[error("dataset has {0} rows, at least 10 are required")]
    TooFewRows(usize),
    #[error("synthetic spec produced a single class after {0} attempts")]
    DegenerateSpec(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Errors from fitting.
#[derive(Debug, Error)]
pub enum TrainError {
    #[error("labels must be 0 or 1, found {0}")]
    InvalidLabel(u8),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
}
