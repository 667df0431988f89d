//! Prior cases that satisfy an explanation's rule, ranked by similarity.

use arm_core::{BinarizedMatrix, Bits, RawValue};
use serde::{Deserialize, Serialize};

use crate::rule::Rule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarCase {
    pub row: usize,
    pub values: Vec<RawValue>,
    pub label: u8,
    /// Original binary columns on which the case agrees with the query.
    pub shared_features: usize,
}

/// Number of original (non-complement) columns where `a` and `b` agree.
pub fn shared_features(a: &Bits, b: &Bits, n_original: usize) -> usize {
    (0..n_original).filter(|&j| a.get(j) == b.get(j)).count()
}

/// Up to `k` rows satisfying `rule`, most shared features first, ties by
/// row index. `exclude` drops the query's own row.
pub fn similar_cases(
    x_e: &Bits,
    rule: &Rule,
    matrix: &BinarizedMatrix,
    rows: &[Vec<RawValue>],
    model_labels: &[u8],
    k: usize,
    exclude: Option<usize>,
) -> Vec<SimilarCase> {
    let n_original = matrix.n_original();
    let mut scored: Vec<(usize, usize)> = matrix
        .rows()
        .iter()
        .enumerate()
        .filter(|&(i, row)| Some(i) != exclude && rule.matches(row))
        .map(|(i, row)| (i, shared_features(x_e, row, n_original)))
        .collect();
    scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    scored
        .into_iter()
        .take(k)
        .map(|(row, shared)| SimilarCase {
            row,
            values: rows[row].clone(),
            label: model_labels[row],
            shared_features: shared,
        })
        .collect()
}
