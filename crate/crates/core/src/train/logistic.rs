//! ℓ2-regularized logistic regression with sign constraints.
//!
//! Parameters are laid out as `[coef_0, …, coef_{d−1}, intercept]`. The
//! objective is the summed negative log-likelihood plus `λ/2 · ‖coef‖²`;
//! the intercept is not penalized. Rows with identical features are
//! aggregated into (count, positives) pairs, which leaves the objective
//! unchanged and makes binary subscale designs very cheap.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::binarize::BinarizedMatrix;
use crate::bits::Bits;
use crate::error::TrainError;
use crate::train::optimizer::{kkt_violation, minimize, Bounds, Minimum, Objective};
use crate::train::TrainConfig;

/// `ln(1 + e^z)` without overflow.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Unclamped logistic function, stable for large `|z|`.
#[inline]
pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
pub struct LogisticProblem {
    n_cols: usize,
    /// Row-major `n_rows × n_cols` features of the aggregated rows.
    x: Vec<f64>,
    totals: Vec<f64>,
    positives: Vec<f64>,
    lambda: f64,
}

impl LogisticProblem {
    /// Dense real-valued design. Rows are aggregated when identical.
    pub fn from_dense(rows: &[Vec<f64>], labels: &[u8], lambda: f64) -> Result<Self, TrainError> {
        check_labels(labels)?;
        if rows.len() != labels.len() {
            return Err(TrainError::DimensionMismatch(format!(
                "{} rows, {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut problem = Self::empty(n_cols, lambda);
        for (row, &y) in rows.iter().zip(labels) {
            if row.len() != n_cols {
                return Err(TrainError::DimensionMismatch("ragged design".into()));
            }
            let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
            let slot = *index.entry(key).or_insert_with(|| {
                problem.x.extend_from_slice(row);
                problem.totals.push(0.0);
                problem.positives.push(0.0);
                problem.totals.len() - 1
            });
            problem.totals[slot] += 1.0;
            problem.positives[slot] += f64::from(y);
        }
        Ok(problem)
    }

    /// Binary design over `columns` of `matrix`, restricted to `rows` when given.
    pub fn from_binary(
        matrix: &BinarizedMatrix,
        columns: &[usize],
        labels: &[u8],
        rows: Option<&[usize]>,
        lambda: f64,
    ) -> Result<Self, TrainError> {
        check_labels(labels)?;
        if labels.len() != matrix.n_rows() {
            return Err(TrainError::DimensionMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                matrix.n_rows()
            )));
        }
        let mut index: HashMap<Bits, usize> = HashMap::new();
        let mut problem = Self::empty(columns.len(), lambda);
        let mut add = |i: usize| {
            let pattern = Bits::from_fn(columns.len(), |c| matrix.get(i, columns[c]));
            let slot = *index.entry(pattern).or_insert_with_key(|p| {
                problem
                    .x
                    .extend((0..columns.len()).map(|c| if p.get(c) { 1.0 } else { 0.0 }));
                problem.totals.push(0.0);
                problem.positives.push(0.0);
                problem.totals.len() - 1
            });
            problem.totals[slot] += 1.0;
            problem.positives[slot] += f64::from(labels[i]);
        };
        match rows {
            Some(idx) => idx.iter().for_each(|&i| add(i)),
            None => (0..matrix.n_rows()).for_each(&mut add),
        }
        Ok(problem)
    }

    fn empty(n_cols: usize, lambda: f64) -> Self {
        Self {
            n_cols,
            x: Vec::new(),
            totals: Vec::new(),
            positives: Vec::new(),
            lambda,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of observations before aggregation.
    pub fn n_observations(&self) -> f64 {
        self.totals.iter().sum()
    }

    pub fn n_distinct_rows(&self) -> usize {
        self.totals.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    fn logit(&self, r: usize, params: &[f64]) -> f64 {
        let row = &self.x[r * self.n_cols..(r + 1) * self.n_cols];
        let mut z = params[self.n_cols];
        for (v, b) in row.iter().zip(params) {
            z += v * b;
        }
        z
    }

    /// Unpenalized negative log-likelihood.
    pub fn nll(&self, params: &[f64]) -> f64 {
        (0..self.totals.len())
            .map(|r| {
                let z = self.logit(r, params);
                self.totals[r] * softplus(z) - self.positives[r] * z
            })
            .sum()
    }

    fn penalty(&self, params: &[f64]) -> f64 {
        0.5 * self.lambda * params[..self.n_cols].iter().map(|b| b * b).sum::<f64>()
    }

    /// Fraction of observations whose label matches `σ(z) ≥ 0.5`.
    pub fn accuracy(&self, params: &[f64]) -> f64 {
        let mut correct = 0.0;
        for r in 0..self.totals.len() {
            let predicted_positive = self.logit(r, params) >= 0.0;
            correct += if predicted_positive {
                self.positives[r]
            } else {
                self.totals[r] - self.positives[r]
            };
        }
        correct / self.n_observations().max(1.0)
    }
}

impl Objective for LogisticProblem {
    fn dim(&self) -> usize {
        self.n_cols + 1
    }

    fn value(&self, params: &[f64]) -> f64 {
        self.nll(params) + self.penalty(params)
    }

    fn value_grad(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.n_cols;
        for (g, b) in grad[..d].iter_mut().zip(params) {
            *g = self.lambda * b;
        }
        grad[d] = 0.0;
        let mut nll = 0.0;
        for r in 0..self.totals.len() {
            let z = self.logit(r, params);
            nll += self.totals[r] * softplus(z) - self.positives[r] * z;
            let resid = self.totals[r] * logistic(z) - self.positives[r];
            if resid != 0.0 {
                let row = &self.x[r * d..(r + 1) * d];
                for (g, v) in grad[..d].iter_mut().zip(row) {
                    *g += resid * v;
                }
                grad[d] += resid;
            }
        }
        nll + self.penalty(params)
    }

    fn is_convex(&self) -> bool {
        true
    }
}

fn check_labels(labels: &[u8]) -> Result<(), TrainError> {
    match labels.iter().find(|&&y| y > 1) {
        Some(&y) => Err(TrainError::InvalidLabel(y)),
        None => Ok(()),
    }
}

/// Convergence diagnostics of one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Final penalized objective.
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_violation: f64,
    /// Coefficients pinned at zero by their sign constraint.
    pub active_constraints: Vec<bool>,
}

impl FitDiagnostics {
    fn from_minimum(m: &Minimum, constrained: &[bool]) -> Self {
        Self {
            loss: m.value,
            iterations: m.iterations,
            converged: m.converged,
            kkt_violation: m.kkt_violation,
            active_constraints: constrained
                .iter()
                .zip(&m.x)
                .map(|(&c, &b)| c && b == 0.0)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub diagnostics: FitDiagnostics,
}

/// Bounds for `[coefs…, intercept]`: constrained coefficients are
/// non-negative, the intercept lives in `±bias_bound`.
pub fn logistic_bounds(constrained: &[bool], bias_bound: f64) -> Bounds {
    let mut bounds = Bounds::unbounded(constrained.len() + 1);
    for (i, &c) in constrained.iter().enumerate() {
        if c {
            bounds.lower[i] = 0.0;
        }
    }
    bounds.lower[constrained.len()] = -bias_bound;
    bounds.upper[constrained.len()] = bias_bound;
    bounds
}

/// Minimizes `problem` from zero under the sign constraints in `constrained`.
pub fn fit_logistic(
    problem: &LogisticProblem,
    constrained: &[bool],
    config: &TrainConfig,
) -> Result<LinearFit, TrainError> {
    if problem.n_observations() == 0.0 {
        return Err(TrainError::EmptyTrainingSet);
    }
    if constrained.len() != problem.n_cols() {
        return Err(TrainError::DimensionMismatch(format!(
            "{} constraint flags for {} columns",
            constrained.len(),
            problem.n_cols()
        )));
    }
    let bounds = logistic_bounds(constrained, config.bias_bound);
    let m = minimize(problem, vec![0.0; problem.dim()], &bounds, &config.step_options());
    if !m.converged {
        tracing::warn!(
            kkt = m.kkt_violation,
            iterations = m.iterations,
            "logistic fit did not converge"
        );
    }
    let diagnostics = FitDiagnostics::from_minimum(&m, constrained);
    let d = problem.n_cols();
    Ok(LinearFit {
        intercept: m.x[d],
        coefficients: m.x[..d].to_vec(),
        diagnostics,
    })
}

/// Damped Newton for the problem without sign constraints. The intercept
/// is still kept in `±bias_bound`; if the bound becomes active the
/// projected first-order method takes over from the Newton iterate.
pub fn fit_unconstrained(problem: &LogisticProblem, config: &TrainConfig) -> Result<LinearFit, TrainError> {
    if problem.n_observations() == 0.0 {
        return Err(TrainError::EmptyTrainingSet);
    }
    let d = problem.n_cols();
    let dim = d + 1;
    let constrained = vec![false; d];
    let bounds = logistic_bounds(&constrained, config.bias_bound);
    let mut x = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut value = problem.value_grad(&x, &mut grad);
    let mut iterations = 0;
    while kkt_violation(&x, &grad, &bounds) > config.grad_tol && iterations < config.max_iters {
        iterations += 1;
        let mut hessian = DMatrix::<f64>::zeros(dim, dim);
        let mut feat = vec![0.0; dim];
        for r in 0..problem.totals.len() {
            let z = problem.logit(r, &x);
            let p = logistic(z);
            let w = problem.totals[r] * p * (1.0 - p);
            if w == 0.0 {
                continue;
            }
            feat[..d].copy_from_slice(&problem.x[r * d..(r + 1) * d]);
            feat[d] = 1.0;
            for i in 0..dim {
                if feat[i] == 0.0 {
                    continue;
                }
                let wi = w * feat[i];
                for j in i..dim {
                    hessian[(i, j)] += wi * feat[j];
                }
            }
        }
        for i in 0..dim {
            for j in 0..i {
                hessian[(i, j)] = hessian[(j, i)];
            }
            // Ridge term plus a tiny jitter so unpenalized directions stay solvable.
            hessian[(i, i)] += if i < d { problem.lambda } else { 0.0 } + 1e-10;
        }
        let Some(chol) = hessian.cholesky() else {
            break;
        };
        let direction = chol.solve(&DVector::from_column_slice(&grad));
        let slope: f64 = -direction.dot(&DVector::from_column_slice(&grad));
        let mut t = 1.0;
        let mut accepted = false;
        let mut x_new = vec![0.0; dim];
        while t > 1e-12 {
            for i in 0..dim {
                x_new[i] = bounds.clamp(i, x[i] - t * direction[i]);
            }
            let trial = problem.value(&x_new);
            if trial <= value + config.armijo * t * slope {
                accepted = true;
                break;
            }
            t *= config.backtrack;
        }
        if !accepted {
            break;
        }
        x = x_new;
        value = problem.value_grad(&x, &mut grad);
    }
    let kkt = kkt_violation(&x, &grad, &bounds);
    let m = if kkt > config.grad_tol {
        // Fall back to the first-order method, started at the Newton iterate.
        minimize(problem, x, &bounds, &config.step_options())
    } else {
        Minimum {
            x,
            value,
            iterations,
            converged: true,
            kkt_violation: kkt,
            trace: Vec::new(),
        }
    };
    let diagnostics = FitDiagnostics::from_minimum(&m, &constrained);
    Ok(LinearFit {
        intercept: m.x[d],
        coefficients: m.x[..d].to_vec(),
        diagnostics,
    })
}

/// Fits one subscale as a standalone classifier of the labels.
///
/// `columns` are design-matrix columns, `constrained` marks which of them
/// must stay non-negative. `rows` restricts training to a subset.
pub fn fit_subscale(
    matrix: &BinarizedMatrix,
    columns: &[usize],
    constrained: &[bool],
    labels: &[u8],
    rows: Option<&[usize]>,
    config: &TrainConfig,
) -> Result<LinearFit, TrainError> {
    let n = rows.map_or(matrix.n_rows(), <[usize]>::len);
    let problem = LogisticProblem::from_binary(matrix, columns, labels, rows, config.lambda_for(n))?;
    fit_logistic(&problem, constrained, config)
}

/// Fits the second layer on subscale risks (`N × K`) with `γ ≥ 0`.
pub fn fit_second_layer(risks: &[Vec<f64>], labels: &[u8], config: &TrainConfig) -> Result<LinearFit, TrainError> {
    let problem = LogisticProblem::from_dense(risks, labels, config.second_layer_lambda_for(labels.len()))?;
    let constrained = vec![true; problem.n_cols()];
    fit_logistic(&problem, &constrained, config)
}
