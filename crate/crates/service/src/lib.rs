//! HTTP API and command-line front end for additive risk models, their
//! rule explanations and case retrieval.

pub mod api;
pub mod commands;
pub mod state;
pub mod topology;

pub use api::{router, ApiError, FeaturesRequest};
pub use state::{AppState, Loaded};
pub use topology::ModelTopology;
