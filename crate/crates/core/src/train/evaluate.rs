//! Repeated random train/test evaluation against two baselines: an
//! unconstrained logistic regression on the same binarized features and
//! the majority class of the training split.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::data::{split, DatasetSchema, RawDataset, SplitConfig};
use crate::error::TrainError;
use crate::model::ArmModel;
use crate::train::logistic::{fit_unconstrained, LinearFit, LogisticProblem};
use crate::train::{accuracy, fit_model, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub arm: f64,
    pub logistic: f64,
    pub majority: f64,
    pub arm_converged: bool,
}

/// Mean and sample standard deviation over splits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

impl MetricSummary {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count() as f64;
        let mean = values.clone().sum::<f64>() / n;
        let var = if n > 1.0 {
            values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub splits: Vec<SplitMetrics>,
    pub arm: MetricSummary,
    pub logistic: MetricSummary,
    pub majority: MetricSummary,
}

fn linear_label(fit: &LinearFit, row: &Bits) -> u8 {
    let mut z = fit.intercept;
    for (j, &b) in fit.coefficients.iter().enumerate() {
        if row.get(j) {
            z += b;
        }
    }
    u8::from(z >= 0.0)
}

/// Test accuracies over `split_config.n_splits` random splits. Thresholds
/// are re-derived from each training split unless the schema fixes them.
pub fn evaluate(
    data: &RawDataset,
    schema: &DatasetSchema,
    config: &TrainConfig,
    split_config: &SplitConfig,
) -> Result<EvalReport, TrainError> {
    config.validate()?;
    schema.validate()?;
    let splits = split(&data.labels, split_config)?;
    let labels = &data.labels;
    let per_split = splits
        .par_iter()
        .map(|s| -> Result<SplitMetrics, TrainError> {
            let specs = schema.feature_specs(data, Some(&s.train));
            let template = ArmModel::zeroed(specs, schema.partition())?;
            let matrix = template.binarizer().binarize_rows(&data.rows)?;
            let (model, report) = fit_model(&template, &matrix, labels, Some(&s.train), config)?;
            let arm = accuracy(&model, &matrix, labels, Some(&s.test));

            let originals: Vec<usize> = (0..matrix.n_original()).collect();
            let problem = LogisticProblem::from_binary(
                &matrix,
                &originals,
                labels,
                Some(&s.train),
                config.lambda_for(s.train.len()),
            )?;
            let baseline = fit_unconstrained(&problem, config)?;
            let logistic = s
                .test
                .iter()
                .filter(|&&i| linear_label(&baseline, matrix.row(i)) == labels[i])
                .count() as f64
                / s.test.len() as f64;

            let positives = s.train.iter().filter(|&&i| labels[i] == 1).count();
            let majority_label = u8::from(2 * positives > s.train.len());
            let majority = s.test.iter().filter(|&&i| labels[i] == majority_label).count() as f64
                / s.test.len() as f64;
            Ok(SplitMetrics {
                arm,
                logistic,
                majority,
                arm_converged: report.converged(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport {
        arm: MetricSummary::of(per_split.iter().map(|m| m.arm)),
        logistic: MetricSummary::of(per_split.iter().map(|m| m.logistic)),
        majority: MetricSummary::of(per_split.iter().map(|m| m.majority)),
        splits: per_split,
    })
}
