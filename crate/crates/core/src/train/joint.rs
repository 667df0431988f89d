//! Joint refinement of all parameters.
//!
//! Minimizes
//! `α · (NLL_global + λ_γ/2 ‖γ‖² + λ/2 Σ_k ‖β_k‖²) + (1 − α)/K · Σ_k (NLL_k + λ/2 ‖β_k‖²)`
//! where `NLL_k` treats subscale `k` as a standalone classifier. Parameters
//! are packed as `[β_1, b_1, …, β_K, b_K, γ_1, …, γ_K, γ_0]`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::binarize::BinarizedMatrix;
use crate::bits::Bits;
use crate::error::TrainError;
use crate::model::{ArmModel, LOGIT_CLAMP};
use crate::train::logistic::FitDiagnostics;
use crate::train::optimizer::{minimize, Bounds, Objective};
use crate::train::TrainConfig;

#[derive(Debug, Clone)]
pub struct JointProblem {
    alpha: f64,
    lambda: f64,
    gamma_lambda: f64,
    /// Start of each subscale's block; the bias sits at `offsets[k + 1] − 1`.
    offsets: Vec<usize>,
    /// Per aggregated row and subscale: packed indices of active coefficients.
    active: Vec<Vec<Vec<usize>>>,
    totals: Vec<f64>,
    positives: Vec<f64>,
    constrained: Vec<bool>,
}

const CHUNK: usize = 512;

/// `(ln(1 + e^z), σ(z))` sharing one exponential.
#[inline]
fn softplus_sigmoid(z: f64) -> (f64, f64) {
    let e = (-z.abs()).exp();
    let sp = z.max(0.0) + e.ln_1p();
    let s = if z >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
    (sp, s)
}

/// Clamped logit and the derivative of the clamp.
#[inline]
fn clamp_logit(z: f64) -> (f64, f64) {
    if z.abs() < LOGIT_CLAMP {
        (z, 1.0)
    } else {
        (z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP), 0.0)
    }
}

impl JointProblem {
    pub fn new(
        model: &ArmModel,
        matrix: &BinarizedMatrix,
        labels: &[u8],
        rows: Option<&[usize]>,
        alpha: f64,
        lambda: f64,
        gamma_lambda: f64,
    ) -> Result<Self, TrainError> {
        if labels.len() != matrix.n_rows() {
            return Err(TrainError::DimensionMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                matrix.n_rows()
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y > 1) {
            return Err(TrainError::InvalidLabel(y));
        }
        let n_sub = model.n_subscales();
        let mut offsets = Vec::with_capacity(n_sub + 1);
        let mut constrained = Vec::new();
        offsets.push(0);
        for k in 0..n_sub {
            constrained.extend(model.constrained_mask(k));
            constrained.push(false);
            offsets.push(constrained.len());
        }
        constrained.extend(std::iter::repeat(true).take(n_sub));
        constrained.push(false);

        let mut problem = Self {
            alpha,
            lambda,
            gamma_lambda,
            offsets,
            active: Vec::new(),
            totals: Vec::new(),
            positives: Vec::new(),
            constrained,
        };
        let mut index: HashMap<&Bits, usize> = HashMap::new();
        let mut add = |i: usize| {
            let row = matrix.row(i);
            let slot = *index.entry(row).or_insert_with(|| {
                let active = (0..n_sub)
                    .map(|k| {
                        model
                            .subscale_columns(k)
                            .iter()
                            .enumerate()
                            .filter(|&(_, &j)| row.get(j))
                            .map(|(l, _)| problem.offsets[k] + l)
                            .collect()
                    })
                    .collect();
                problem.active.push(active);
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
        if problem.totals.is_empty() {
            return Err(TrainError::EmptyTrainingSet);
        }
        Ok(problem)
    }

    fn n_subscales(&self) -> usize {
        self.offsets.len() - 1
    }

    fn gamma_start(&self) -> usize {
        self.offsets[self.n_subscales()]
    }

    fn is_bias(&self, i: usize) -> bool {
        i == self.dim() - 1 || self.offsets[1..].contains(&(i + 1))
    }

    fn is_gamma(&self, i: usize) -> bool {
        i >= self.gamma_start() && i < self.dim() - 1
    }

    /// Which packed parameters must stay non-negative.
    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn bounds(&self, bias_bound: f64) -> Bounds {
        let mut b = Bounds::unbounded(self.dim());
        for i in 0..self.dim() {
            if self.constrained[i] {
                b.lower[i] = 0.0;
            }
            if self.is_bias(i) {
                b.lower[i] = -bias_bound;
                b.upper[i] = bias_bound;
            }
        }
        b
    }

    pub fn pack(model: &ArmModel) -> Vec<f64> {
        let mut x = Vec::new();
        for s in model.subscales() {
            x.extend_from_slice(&s.coefficients);
            x.push(s.bias);
        }
        x.extend_from_slice(model.second_layer_weights());
        x.push(model.second_layer_bias());
        x
    }

    pub fn unpack(&self, model: &ArmModel, x: &[f64]) -> Result<ArmModel, TrainError> {
        let k = self.n_subscales();
        let coefficients = (0..k)
            .map(|s| {
                let (lo, hi) = (self.offsets[s], self.offsets[s + 1]);
                (x[lo..hi - 1].to_vec(), x[hi - 1])
            })
            .collect();
        let g = self.gamma_start();
        Ok(model.with_parameters(coefficients, x[g..g + k].to_vec(), x[g + k])?)
    }

    fn penalty(&self, x: &[f64]) -> f64 {
        let k = self.n_subscales().max(1) as f64;
        let beta_weight = self.alpha + (1.0 - self.alpha) / k;
        let mut beta = 0.0;
        let mut gamma = 0.0;
        for (i, v) in x.iter().enumerate() {
            if self.is_gamma(i) {
                gamma += v * v;
            } else if !self.is_bias(i) {
                beta += v * v;
            }
        }
        0.5 * (self.lambda * beta_weight * beta + self.gamma_lambda * self.alpha * gamma)
    }

    /// Loss and, when requested, the gradient of the data terms over rows
    /// `lo..hi`, accumulated into `grad`.
    fn evaluate_rows(&self, x: &[f64], lo: usize, hi: usize, mut grad: Option<&mut [f64]>) -> f64 {
        let k = self.n_subscales();
        let sub_weight = if k == 0 { 0.0 } else { (1.0 - self.alpha) / k as f64 };
        let g0 = self.gamma_start();
        let mut loss = 0.0;
        let mut risks = vec![0.0; k];
        let mut clamp_d = vec![0.0; k];
        for r in lo..hi {
            let (n, y) = (self.totals[r], self.positives[r]);
            let mut z = x[g0 + k];
            for s in 0..k {
                let mut p = x[self.offsets[s + 1] - 1];
                for &i in &self.active[r][s] {
                    p += x[i];
                }
                let (pc, d) = clamp_logit(p);
                let (sp, risk) = softplus_sigmoid(pc);
                clamp_d[s] = d;
                risks[s] = risk;
                z += x[g0 + s] * risk;
                loss += sub_weight * (n * sp - y * pc);
            }
            let (zc, zd) = clamp_logit(z);
            let (sp, prob) = softplus_sigmoid(zc);
            loss += self.alpha * (n * sp - y * zc);

            let Some(g) = grad.as_deref_mut() else {
                continue;
            };
            let dz = self.alpha * (n * prob - y) * zd;
            g[g0 + k] += dz;
            for s in 0..k {
                g[g0 + s] += dz * risks[s];
                let from_global = dz * x[g0 + s] * risks[s] * (1.0 - risks[s]);
                let from_own = sub_weight * (n * risks[s] - y);
                let ds = (from_global + from_own) * clamp_d[s];
                if ds != 0.0 {
                    g[self.offsets[s + 1] - 1] += ds;
                    for &i in &self.active[r][s] {
                        g[i] += ds;
                    }
                }
            }
        }
        loss
    }

    /// Rows are processed in fixed chunks whose results are combined in
    /// order, so the value does not depend on the thread count.
    fn evaluate(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let n_rows = self.totals.len();
        let chunks: Vec<(usize, usize)> = (0..n_rows)
            .step_by(CHUNK)
            .map(|lo| (lo, (lo + CHUNK).min(n_rows)))
            .collect();
        let want_grad = grad.is_some();
        let parts: Vec<(f64, Vec<f64>)> = chunks
            .par_iter()
            .map(|&(lo, hi)| {
                if want_grad {
                    let mut g = vec![0.0; x.len()];
                    let l = self.evaluate_rows(x, lo, hi, Some(&mut g));
                    (l, g)
                } else {
                    (self.evaluate_rows(x, lo, hi, None), Vec::new())
                }
            })
            .collect();
        let mut loss = 0.0;
        for (l, _) in &parts {
            loss += l;
        }
        if let Some(g) = grad {
            let k = self.n_subscales();
            let beta_weight = self.alpha + if k == 0 { 0.0 } else { (1.0 - self.alpha) / k as f64 };
            for (i, gi) in g.iter_mut().enumerate() {
                *gi = if self.is_gamma(i) {
                    self.gamma_lambda * self.alpha * x[i]
                } else if self.is_bias(i) {
                    0.0
                } else {
                    self.lambda * beta_weight * x[i]
                };
            }
            for (_, part) in &parts {
                for (gi, p) in g.iter_mut().zip(part) {
                    *gi += p;
                }
            }
        }
        loss + self.penalty(x)
    }
}

impl Objective for JointProblem {
    fn dim(&self) -> usize {
        self.constrained.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.evaluate(x, None)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.evaluate(x, Some(grad))
    }
}

/// Refines every parameter of `model` under the joint objective, starting
/// from its current values. The result never has a larger objective.
pub fn fit_joint(
    model: &ArmModel,
    matrix: &BinarizedMatrix,
    labels: &[u8],
    rows: Option<&[usize]>,
    config: &TrainConfig,
) -> Result<(ArmModel, FitDiagnostics), TrainError> {
    config.validate()?;
    let n = rows.map_or(matrix.n_rows(), <[usize]>::len);
    let problem = JointProblem::new(
        model,
        matrix,
        labels,
        rows,
        config.joint_alpha,
        config.lambda_for(n),
        config.second_layer_lambda_for(n),
    )?;
    let bounds = problem.bounds(config.bias_bound);
    let m = minimize(&problem, JointProblem::pack(model), &bounds, &config.step_options());
    if !m.converged {
        tracing::warn!(kkt = m.kkt_violation, iterations = m.iterations, "joint fit did not converge");
    }
    let refined = problem.unpack(model, &m.x)?;
    let diagnostics = FitDiagnostics {
        loss: m.value,
        iterations: m.iterations,
        converged: m.converged,
        kkt_violation: m.kkt_violation,
        active_constraints: problem
            .constrained()
            .iter()
            .zip(&m.x)
            .map(|(&c, &v)| c && v == 0.0)
            .collect(),
    };
    Ok((refined, diagnostics))
}
