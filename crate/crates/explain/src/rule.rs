//! Conjunctive rules, their verification and rendering.

use arm_core::{BinarizedMatrix, Binarizer, Bits};
use serde::{Deserialize, Serialize};

/// How much is known about a rule's optimality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimality {
    /// The search closed the gap.
    Proven,
    /// The budget ran out; `bound` is a lower bound on sparsity or an upper
    /// bound on support, depending on the objective.
    Bounded { bound: usize },
    /// Produced by a heuristic with no bound.
    Heuristic,
}

/// A conjunction of binary columns that implies a model label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    /// Design-matrix columns, ascending.
    pub features: Vec<usize>,
    pub label: u8,
    pub sparsity: usize,
    pub support: usize,
    pub optimality: Optimality,
}

impl Rule {
    pub fn is_proven(&self) -> bool {
        self.optimality == Optimality::Proven
    }

    /// True when `x_e` satisfies every condition.
    pub fn is_relevant(&self, x_e: &Bits) -> bool {
        self.features.iter().all(|&p| p < x_e.len() && x_e.get(p))
    }

    pub fn matches(&self, row: &Bits) -> bool {
        self.is_relevant(row)
    }

    /// Conditions joined by AND, using column display names.
    pub fn conditions(&self, binarizer: &Binarizer) -> Vec<String> {
        self.features.iter().map(|&p| binarizer.column_name(p)).collect()
    }

    /// `A AND B ⇒ high risk, supported by N prior cases`.
    pub fn render(&self, binarizer: &Binarizer, label_names: &LabelNames) -> String {
        let lhs = if self.features.is_empty() {
            "always".to_string()
        } else {
            self.conditions(binarizer).join(" AND ")
        };
        let cases = if self.support == 1 { "case" } else { "cases" };
        format!(
            "{lhs} ⇒ {}, supported by {} prior {cases}",
            label_names.name(self.label),
            self.support
        )
    }
}

/// Human-readable names for model labels 0 and 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelNames {
    pub negative: String,
    pub positive: String,
}

impl Default for LabelNames {
    fn default() -> Self {
        Self {
            negative: "low risk".into(),
            positive: "high risk".into(),
        }
    }
}

impl LabelNames {
    pub fn name(&self, label: u8) -> &str {
        if label == 1 {
            &self.positive
        } else {
            &self.negative
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub consistent: bool,
    pub support: usize,
    /// Rows satisfying the rule whose model label differs.
    pub counterexamples: Vec<usize>,
}

/// Exhaustive scan of `matrix` for rows satisfying `rule`.
pub fn verify_rule(rule: &Rule, matrix: &BinarizedMatrix, model_labels: &[u8]) -> Verification {
    let mut support = 0;
    let mut counterexamples = Vec::new();
    for (i, row) in matrix.rows().iter().enumerate() {
        if rule.matches(row) {
            support += 1;
            if model_labels[i] != rule.label {
                counterexamples.push(i);
            }
        }
    }
    Verification {
        consistent: counterexamples.is_empty(),
        support,
        counterexamples,
    }
}

/// A rule is valid for `x_e` when it is relevant, consistent, and its
/// recorded support is exact.
pub fn rule_is_valid(rule: &Rule, x_e: &Bits, matrix: &BinarizedMatrix, model_labels: &[u8]) -> bool {
    let v = verify_rule(rule, matrix, model_labels);
    v.consistent && v.support == rule.support && rule.is_relevant(x_e) && rule.sparsity == rule.features.len()
}
