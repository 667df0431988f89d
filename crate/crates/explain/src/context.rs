//! Candidate conditions and cover sets for one observation.

use arm_core::{BinarizedMatrix, Bits};

use crate::error::ExplainError;

/// Everything the solvers need to explain one binarized observation `x_e`
/// against a reference dataset labelled by the model.
#[derive(Debug, Clone)]
pub struct ExplainContext<'a> {
    matrix: &'a BinarizedMatrix,
    label: u8,
    /// Design-matrix columns that are 1 for `x_e`, ascending.
    candidates: Vec<usize>,
    /// Reference rows whose model label differs from `label`.
    opposite: Vec<usize>,
}

/// Builds the context for `x_e` with model label `label`.
///
/// Fails when some opposite-label row satisfies every candidate, since no
/// conjunction of candidates can then exclude it.
pub fn build_context<'a>(
    x_e: &Bits,
    matrix: &'a BinarizedMatrix,
    model_labels: &[u8],
    label: u8,
) -> Result<ExplainContext<'a>, ExplainError> {
    if x_e.len() != matrix.n_columns() {
        return Err(ExplainError::DimensionMismatch(format!(
            "observation has {} columns, dataset has {}",
            x_e.len(),
            matrix.n_columns()
        )));
    }
    if model_labels.len() != matrix.n_rows() {
        return Err(ExplainError::DimensionMismatch(format!(
            "{} labels for {} rows",
            model_labels.len(),
            matrix.n_rows()
        )));
    }
    let candidates: Vec<usize> = x_e.iter_ones().collect();
    let opposite: Vec<usize> = (0..matrix.n_rows()).filter(|&i| model_labels[i] != label).collect();
    if let Some(&row) = opposite.iter().find(|&&i| candidates.iter().all(|&p| matrix.get(i, p))) {
        return Err(ExplainError::InfeasibleExplanation { row });
    }
    Ok(ExplainContext {
        matrix,
        label,
        candidates,
        opposite,
    })
}

impl<'a> ExplainContext<'a> {
    pub fn matrix(&self) -> &'a BinarizedMatrix {
        self.matrix
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn opposite(&self) -> &[usize] {
        &self.opposite
    }

    /// Opposite-label rows excluded by candidate `s`: those where its column is 0.
    pub fn cover_rows(&self, s: usize) -> Vec<usize> {
        let p = self.candidates[s];
        self.opposite.iter().copied().filter(|&i| !self.matrix.get(i, p)).collect()
    }

    /// Rows where every listed column is 1.
    pub fn support_rows(&self, columns: &[usize]) -> Bits {
        let mut rows = Bits::ones(self.n_rows());
        for &p in columns {
            rows.and_assign(self.matrix.column(p));
        }
        rows
    }

    /// Candidates that exclude opposite row `i`, as positions into `candidates()`.
    pub(crate) fn covering(&self, i: usize) -> Bits {
        let row = self.matrix.row(i);
        Bits::from_fn(self.candidates.len(), |s| !row.get(self.candidates[s]))
    }
}
