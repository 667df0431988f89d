//! Fitting: independent subscale fits, then the second layer, then an
//! optional joint refinement.

mod evaluate;
mod joint;
mod logistic;
pub mod optimizer;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binarize::BinarizedMatrix;
use crate::data::{DatasetSchema, RawDataset};
use crate::error::TrainError;
use crate::model::ArmModel;

pub use evaluate::{evaluate, EvalReport, MetricSummary, SplitMetrics};
pub use joint::{fit_joint, JointProblem};
pub use logistic::{
    fit_logistic, fit_second_layer, fit_subscale, fit_unconstrained, logistic_bounds, FitDiagnostics, LinearFit, LogisticProblem,
};
use optimizer::StepOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// ℓ2 strength. `None` scales with the training set: `1e-3 · N`.
    pub l2_lambda: Option<f64>,
    /// ℓ2 strength on the second-layer weights. `None`: `1e-4 · N`. The
    /// subscale risks live in (0, 1), so useful weights are large and a
    /// penalty as strong as the first layer's shrinks them noticeably.
    pub second_layer_lambda: Option<f64>,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Weight of the global loss in the joint objective; 0 skips joint training.
    pub joint_alpha: f64,
    pub seed: u64,
    pub initial_step: f64,
    pub armijo: f64,
    pub backtrack: f64,
    /// Intercepts are kept in `±bias_bound`.
    pub bias_bound: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l2_lambda: None,
            second_layer_lambda: None,
            max_iters: 5000,
            grad_tol: 1e-6,
            joint_alpha: 0.0,
            seed: 7,
            initial_step: 1.0,
            armijo: 1e-4,
            backtrack: 0.5,
            bias_bound: crate::model::LOGIT_CLAMP,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |what: &str| Err(TrainError::Config(what.to_string()));
        for l in [self.l2_lambda, self.second_layer_lambda].into_iter().flatten() {
            if !(l >= 0.0 && l.is_finite()) {
                return bad("ℓ2 strengths must be finite and non-negative");
            }
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(0.0..=1.0).contains(&self.joint_alpha) {
            return bad("joint_alpha must lie in [0, 1]");
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return bad("initial_step must be positive");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo must lie in (0, 1)");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack must lie in (0, 1)");
        }
        if !(self.bias_bound > 0.0) {
            return bad("bias_bound must be positive");
        }
        Ok(())
    }

    pub fn lambda_for(&self, n: usize) -> f64 {
        self.l2_lambda.unwrap_or(1e-3 * n as f64)
    }

    pub fn second_layer_lambda_for(&self, n: usize) -> f64 {
        self.second_layer_lambda.unwrap_or(1e-4 * n as f64)
    }

    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            max_iters: self.max_iters,
            tol: self.grad_tol,
            initial_step: self.initial_step,
            armijo: self.armijo,
            backtrack: self.backtrack,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscaleReport {
    pub name: String,
    #[serde(flatten)]
    pub diagnostics: FitDiagnostics,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n_train: usize,
    pub lambda: f64,
    pub subscales: Vec<SubscaleReport>,
    pub second_layer: FitDiagnostics,
    pub joint: Option<FitDiagnostics>,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

impl FitReport {
    pub fn converged(&self) -> bool {
        self.subscales.iter().all(|s| s.diagnostics.converged)
            && self.second_layer.converged
            && self.joint.as_ref().map_or(true, |j| j.converged)
    }
}

/// Fraction of `rows` (all rows when `None`) where the model label matches.
pub fn accuracy(model: &ArmModel, matrix: &BinarizedMatrix, labels: &[u8], rows: Option<&[usize]>) -> f64 {
    let hit = |i: usize| u32::from(model.label_bits(matrix.row(i)) == labels[i]);
    let (correct, n) = match rows {
        Some(idx) => (idx.iter().map(|&i| hit(i)).sum::<u32>(), idx.len()),
        None => ((0..labels.len()).map(hit).sum::<u32>(), labels.len()),
    };
    if n == 0 {
        0.0
    } else {
        f64::from(correct) / n as f64
    }
}

/// Fits every parameter of `model` (whose structure is kept) on `rows` of
/// the binarized `matrix`.
pub fn fit_model(
    model: &ArmModel,
    matrix: &BinarizedMatrix,
    labels: &[u8],
    rows: Option<&[usize]>,
    config: &TrainConfig,
) -> Result<(ArmModel, FitReport), TrainError> {
    config.validate()?;
    if labels.len() != matrix.n_rows() {
        return Err(TrainError::DimensionMismatch(format!(
            "{} labels for {} rows",
            labels.len(),
            matrix.n_rows()
        )));
    }
    let train_rows: Vec<usize> = match rows {
        Some(r) => r.to_vec(),
        None => (0..matrix.n_rows()).collect(),
    };
    if train_rows.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }

    let fits = (0..model.n_subscales())
        .into_par_iter()
        .map(|k| {
            let constrained = model.constrained_mask(k);
            fit_subscale(
                matrix,
                model.subscale_columns(k),
                &constrained,
                labels,
                Some(&train_rows),
                config,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let zero_weights = vec![0.0; model.n_subscales()];
    let first = model.with_parameters(
        fits.iter().map(|f| (f.coefficients.clone(), f.intercept)).collect(),
        zero_weights,
        0.0,
    )?;

    let risks: Vec<Vec<f64>> = train_rows
        .iter()
        .map(|&i| {
            (0..first.n_subscales())
                .map(|k| first.subscale_risk(k, matrix.row(i)).risk)
                .collect()
        })
        .collect();
    let train_labels: Vec<u8> = train_rows.iter().map(|&i| labels[i]).collect();
    let second = fit_second_layer(&risks, &train_labels, config)?;
    let mut fitted = first.with_parameters(
        fits.iter().map(|f| (f.coefficients.clone(), f.intercept)).collect(),
        second.coefficients.clone(),
        second.intercept,
    )?;

    let mut joint = None;
    if config.joint_alpha > 0.0 {
        let (refined, diagnostics) = fit_joint(&fitted, matrix, labels, Some(&train_rows), config)?;
        fitted = refined;
        joint = Some(diagnostics);
    }

    let subscales = fits
        .into_iter()
        .enumerate()
        .map(|(k, f)| {
            let hits = train_rows
                .iter()
                .filter(|&&i| u8::from(fitted.subscale_risk(k, matrix.row(i)).risk >= 0.5) == labels[i])
                .count();
            SubscaleReport {
                name: fitted.subscale(k).name.clone(),
                diagnostics: f.diagnostics,
                train_accuracy: hits as f64 / train_rows.len() as f64,
            }
        })
        .collect();
    let report = FitReport {
        n_train: train_rows.len(),
        lambda: config.lambda_for(train_rows.len()),
        subscales,
        second_layer: second.diagnostics,
        joint,
        train_accuracy: accuracy(&fitted, matrix, labels, Some(&train_rows)),
        test_accuracy: None,
    };
    Ok((fitted, report))
}

/// Derives thresholds from the training rows, binarizes the data and fits
/// a model with the schema's partition. When `train_rows` is given, the
/// remaining rows are scored as the test set.
pub fn train_model(
    data: &RawDataset,
    schema: &DatasetSchema,
    config: &TrainConfig,
    train_rows: Option<&[usize]>,
) -> Result<(ArmModel, FitReport), TrainError> {
    schema.validate()?;
    if data.feature_names != schema.feature_names() {
        return Err(TrainError::DimensionMismatch(
            "dataset columns do not match the schema".into(),
        ));
    }
    let specs = schema.feature_specs(data, train_rows);
    let template = ArmModel::zeroed(specs, schema.partition())?;
    let matrix = template.binarizer().binarize_rows(&data.rows)?;
    let (model, mut report) = fit_model(&template, &matrix, &data.labels, train_rows, config)?;
    if let Some(train) = train_rows {
        let mut in_train = vec![false; data.n_rows()];
        for &i in train {
            in_train[i] = true;
        }
        let test: Vec<usize> = (0..data.n_rows()).filter(|&i| !in_train[i]).collect();
        if !test.is_empty() {
            report.test_accuracy = Some(accuracy(&model, &matrix, &data.labels, Some(&test)));
        }
    }
    tracing::info!(
        train_accuracy = report.train_accuracy,
        test_accuracy = ?report.test_accuracy,
        converged = report.converged(),
        "trained model"
    );
    Ok((model, report))
}
