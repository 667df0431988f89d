//! Globally consistent rule explanations and case retrieval for additive
//! risk models.

pub mod context;
pub mod error;
pub mod fixtures;
pub mod rule;
pub mod solver;

pub use context::{build_context, ExplainContext};
pub use error::ExplainError;
pub use rule::{rule_is_valid, verify_rule, LabelNames, Optimality, Rule, Verification};
pub use solver::{greedy_cover, solve_max_sparsity, solve_max_support, solve_max_support_from, SolverBudget};
pub mod cascade;
pub mod cases;
pub mod db;
pub mod reference;

pub use cascade::{CascadeConfig, CascadeStep, Explainer, Explanation, RuleSet, Setting, SettingSummary, RELAXATIONS};
pub use cases::{similar_cases, SimilarCase};
pub use db::{build_explanation_db, write_through, BuildOptions, BuildReport, DbEntry, EntrySource, ExplanationDb};
pub use reference::ReferenceData;
