use arm_core::binarize::BinarizedMatrix;
use arm_core::data::{generate_synthetic, split, DatasetSchema, RawDataset, SplitConfig, SyntheticSpec};
use arm_core::fixtures::{random_model, random_row, RandomModelOptions};
use arm_core::train::optimizer::{minimize, Bounds, Objective};
use arm_core::train::{
    accuracy, evaluate, fit_joint, fit_logistic, fit_model, fit_second_layer, fit_subscale, fit_unconstrained,
    logistic_bounds, train_model, JointProblem, LogisticProblem, TrainConfig,
};
use arm_core::{ArmModel, FeatureSpec, Monotonicity};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn central_difference<O: Objective>(obj: &O, x: &[f64], i: usize, h: f64) -> f64 {
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    plus[i] += h;
    minus[i] -= h;
    (obj.value(&plus) - obj.value(&minus)) / (2.0 * h)
}

fn assert_gradient_matches<O: Objective>(obj: &O, x: &[f64]) {
    let mut grad = vec![0.0; obj.dim()];
    obj.value_grad(x, &mut grad);
    for i in 0..obj.dim() {
        let numeric = central_difference(obj, x, i, 1e-6);
        let rel = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1.0);
        assert!(rel <= 1e-5, "coordinate {i}: analytic {} vs numeric {numeric}", grad[i]);
    }
}

fn random_binary_problem(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (BinarizedMatrix, Vec<u8>) {
    let originals: Vec<Vec<u8>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(0..2)).collect()).collect();
    let labels = (0..n).map(|_| rng.gen_range(0..2)).collect();
    (BinarizedMatrix::from_originals(d, &originals), labels)
}

#[test]
fn logistic_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let d = rng.gen_range(1..8);
        let (matrix, labels) = random_binary_problem(&mut rng, 40, d);
        let columns: Vec<usize> = (0..d).collect();
        let lambda = rng.gen_range(0.0..2.0);
        let problem = LogisticProblem::from_binary(&matrix, &columns, &labels, None, lambda).unwrap();
        let x: Vec<f64> = (0..=d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        assert_gradient_matches(&problem, &x);

        let dense: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
        let problem = LogisticProblem::from_dense(&dense, &labels[..30], lambda).unwrap();
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
        assert_gradient_matches(&problem, &x);
    }
}

#[test]
fn joint_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let opts = RandomModelOptions {
        n_features: 4,
        max_thresholds: 3,
        n_subscales: 2,
        max_coefficient: 1.0,
        ..Default::default()
    };
    for trial in 0..50 {
        let model = random_model(&mut rng, &opts);
        let rows: Vec<_> = (0..60).map(|_| random_row(&mut rng, &model, 100.0, 0.1)).collect();
        let matrix = model.binarizer().binarize_rows(&rows).unwrap();
        let labels: Vec<u8> = (0..60).map(|_| rng.gen_range(0..2)).collect();
        let alpha = [0.0, 0.3, 1.0][trial % 3];
        let problem = JointProblem::new(&model, &matrix, &labels, None, alpha, 0.7, 0.2).unwrap();
        assert_gradient_matches(&problem, &JointProblem::pack(&model));
    }
}

fn one_feature(monotonicity: Monotonicity, thresholds: Vec<f64>, values: &[f64]) -> (ArmModel, BinarizedMatrix) {
    let spec = FeatureSpec::new("x", monotonicity, thresholds);
    let model = ArmModel::zeroed(vec![spec], vec![("S".into(), vec![0])]).unwrap();
    let rows: Vec<_> = values.iter().map(|&v| vec![Some(v)]).collect();
    let matrix = model.binarizer().binarize_rows(&rows).unwrap();
    (model, matrix)
}

#[test]
fn separable_toy_is_fit_perfectly() {
    let values: Vec<f64> = (0..20).map(|i| 5.0 * i as f64).collect();
    let labels: Vec<u8> = values.iter().map(|&x| u8::from(x < 50.0)).collect();
    let (model, matrix) = one_feature(Monotonicity::Decreasing, vec![50.0], &values);
    let config = TrainConfig::default();
    let fit = fit_subscale(&matrix, model.subscale_columns(0), &model.constrained_mask(0), &labels, None, &config).unwrap();
    assert!(fit.coefficients[0] > 0.0);
    assert!(fit.diagnostics.converged);
    let (fitted, report) = fit_model(&model, &matrix, &labels, None, &config).unwrap();
    assert_eq!(report.train_accuracy, 1.0);
    assert_eq!(accuracy(&fitted, &matrix, &labels, None), 1.0);
    assert_eq!(report.subscales[0].train_accuracy, 1.0);
}

#[test]
fn all_negative_labels_zero_the_thresholds() {
    let values: Vec<f64> = (0..40).map(|i| i as f64 * 2.5).collect();
    let labels = vec![0u8; values.len()];
    let (model, matrix) = one_feature(Monotonicity::Decreasing, vec![20.0, 50.0, 80.0], &values);
    let config = TrainConfig::default();
    let fit = fit_subscale(&matrix, model.subscale_columns(0), &model.constrained_mask(0), &labels, None, &config).unwrap();
    assert_eq!(&fit.coefficients[..3], &[0.0, 0.0, 0.0]);
    assert!(fit.intercept < -4.0 && fit.intercept >= -config.bias_bound);
    let (fitted, _) = fit_model(&model, &matrix, &labels, None, &config).unwrap();
    for i in 0..matrix.n_rows() {
        assert!(fitted.subscale_risk(0, matrix.row(i)).risk < 0.01);
    }
}

#[test]
fn anti_monotone_signal_pins_constrained_coefficients_at_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let values: Vec<f64> = (0..300).map(|_| rng.gen_range(0.0..100.0)).collect();
    // Risk rises with x although the feature is declared decreasing.
    let labels: Vec<u8> = values
        .iter()
        .map(|&x| u8::from(rng.gen::<f64>() < if x >= 50.0 { 0.8 } else { 0.2 }))
        .collect();
    let (model, matrix) = one_feature(Monotonicity::Decreasing, vec![25.0, 50.0, 75.0], &values);
    let config = TrainConfig::default();
    let columns = model.subscale_columns(0);
    let constrained = fit_subscale(&matrix, columns, &model.constrained_mask(0), &labels, None, &config).unwrap();
    assert_eq!(constrained.coefficients[1], 0.0);
    assert!(constrained.coefficients[..3].iter().all(|&b| b >= 0.0));
    assert!(constrained.diagnostics.active_constraints[1]);

    let problem = LogisticProblem::from_binary(&matrix, columns, &labels, None, config.lambda_for(300)).unwrap();
    let free = fit_logistic(&problem, &[false; 4], &config).unwrap();
    assert!(free.coefficients[1] < -0.5, "{:?}", free.coefficients);
    let newton = fit_unconstrained(&problem, &config).unwrap();
    for (a, b) in newton.coefficients.iter().zip(&free.coefficients) {
        assert!((a - b).abs() < 1e-4);
    }
}

#[test]
fn informative_single_subscale_gets_positive_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let labels: Vec<u8> = (0..200).map(|_| rng.gen_range(0..2)).collect();
    let risks: Vec<Vec<f64>> = labels.iter().map(|&y| vec![if y == 1 { 0.9 } else { 0.1 }]).collect();
    let fit = fit_second_layer(&risks, &labels, &TrainConfig::default()).unwrap();
    assert!(fit.coefficients[0] > 0.0);
    let problem = LogisticProblem::from_dense(&risks, &labels, 0.0).unwrap();
    let params = [fit.coefficients[0], fit.intercept];
    // The subscale alone classifies every row correctly.
    assert_eq!(problem.accuracy(&params), 1.0);
}

#[test]
fn uninformative_subscales_get_negligible_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 20_000;
    let risks: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
    let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    let fit = fit_second_layer(&risks, &labels, &TrainConfig::default()).unwrap();
    let norm = fit.coefficients.iter().map(|g| g * g).sum::<f64>().sqrt();
    assert!(norm <= 0.1, "‖γ‖ = {norm}");
}

#[test]
fn duplicated_subscale_splits_its_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let risk: Vec<f64> = (0..500).map(|_| rng.gen::<f64>()).collect();
    let labels: Vec<u8> = risk.iter().map(|&r| u8::from(rng.gen::<f64>() < r)).collect();
    let config = TrainConfig {
        second_layer_lambda: Some(0.0),
        ..Default::default()
    };
    let single: Vec<Vec<f64>> = risk.iter().map(|&r| vec![r]).collect();
    let double: Vec<Vec<f64>> = risk.iter().map(|&r| vec![r, r]).collect();
    let a = fit_second_layer(&single, &labels, &config).unwrap();
    let b = fit_second_layer(&double, &labels, &config).unwrap();
    assert!((b.coefficients[0] + b.coefficients[1] - a.coefficients[0]).abs() < 1e-4);
    let sigma = |z: f64| 1.0 / (1.0 + (-z).exp());
    for &r in &risk {
        let pa = sigma(a.intercept + a.coefficients[0] * r);
        let pb = sigma(b.intercept + b.coefficients[0] * r + b.coefficients[1] * r);
        assert!((pa - pb).abs() < 1e-6);
    }
}

fn small_synthetic(n: usize, seed: u64) -> (RawDataset, DatasetSchema) {
    let spec = SyntheticSpec::fico_like(n, seed);
    (generate_synthetic(&spec).unwrap(), spec.schema())
}

#[test]
fn training_is_deterministic_and_respects_constraints() {
    let (data, schema) = small_synthetic(2000, 4);
    let config = TrainConfig::default();
    let (a, report) = train_model(&data, &schema, &config, None).unwrap();
    let (b, _) = train_model(&data, &schema, &config, None).unwrap();
    assert_eq!(a, b);
    assert!(report.converged());
    assert!(report.subscales.iter().all(|s| s.diagnostics.loss.is_finite()));
    for k in 0..a.n_subscales() {
        let coefficients = &a.subscale(k).coefficients;
        let mask = a.constrained_mask(k);
        for (l, &c) in coefficients.iter().enumerate() {
            if mask[l] {
                assert!(c >= 0.0);
            }
            if report.subscales[k].diagnostics.active_constraints[l] {
                assert_eq!(c, 0.0);
            }
        }
    }
    assert!(a.second_layer_weights().iter().all(|&g| g >= 0.0));
}

#[test]
fn joint_with_zero_alpha_leaves_the_two_stage_fit_alone() {
    let (data, schema) = small_synthetic(1500, 2);
    let config = TrainConfig::default();
    let specs = schema.feature_specs(&data, None);
    let template = ArmModel::zeroed(specs, schema.partition()).unwrap();
    let matrix = template.binarizer().binarize_rows(&data.rows).unwrap();
    let (two_stage, _) = fit_model(&template, &matrix, &data.labels, None, &config).unwrap();
    let (joint, diagnostics) = fit_joint(&two_stage, &matrix, &data.labels, None, &config).unwrap();
    assert!(diagnostics.converged);
    for (a, b) in JointProblem::pack(&joint).iter().zip(JointProblem::pack(&two_stage)) {
        assert!((a - b).abs() <= config.grad_tol, "{a} vs {b}");
    }
}

/// End-to-end loss of a one-subscale model, written out independently.
fn end_to_end_loss(x: &[Vec<u8>], y: &[u8], theta: &[f64], lambda: f64, gamma_lambda: f64) -> f64 {
    let d = x[0].len();
    let (beta, bias, gamma, gamma0) = (&theta[..d], theta[d], theta[d + 1], theta[d + 2]);
    let mut loss = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let points: f64 = bias + row.iter().zip(beta).map(|(&b, &w)| f64::from(b) * w).sum::<f64>();
        let z = gamma0 + gamma / (1.0 + (-points).exp());
        loss += (1.0 + z.exp()).ln() - f64::from(label) * z;
    }
    loss + 0.5 * lambda * beta.iter().map(|b| b * b).sum::<f64>() + 0.5 * gamma_lambda * gamma * gamma
}

#[test]
fn joint_with_unit_alpha_is_stationary_for_the_end_to_end_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let spec_a = FeatureSpec::new("a", Monotonicity::Decreasing, vec![30.0, 60.0]);
    let spec_b = FeatureSpec::new("b", Monotonicity::Increasing, vec![50.0]);
    let template = ArmModel::zeroed(vec![spec_a, spec_b], vec![("S".into(), vec![0, 1])]).unwrap();
    let rows: Vec<_> = (0..400)
        .map(|_| vec![Some(rng.gen_range(0.0..100.0)), Some(rng.gen_range(0.0..100.0))])
        .collect();
    let labels: Vec<u8> = rows
        .iter()
        .map(|r| {
            let z: f64 = -0.03 * (r[0].unwrap() - 50.0) + 0.02 * (r[1].unwrap() - 50.0);
            u8::from(rng.gen::<f64>() < 1.0 / (1.0 + (-z).exp()))
        })
        .collect();
    let matrix = template.binarizer().binarize_rows(&rows).unwrap();
    let config = TrainConfig {
        joint_alpha: 1.0,
        max_iters: 50_000,
        ..Default::default()
    };
    let (model, report) = fit_model(&template, &matrix, &labels, None, &config).unwrap();
    let joint = report.joint.unwrap();

    let columns = model.subscale_columns(0).to_vec();
    let x: Vec<Vec<u8>> = (0..400)
        .map(|i| columns.iter().map(|&j| u8::from(matrix.get(i, j))).collect())
        .collect();
    let theta = JointProblem::pack(&model);
    let (lambda, gamma_lambda) = (config.lambda_for(400), config.second_layer_lambda_for(400));
    let constrained = {
        let mut c = model.constrained_mask(0);
        c.extend([false, true, false]);
        c
    };
    let h = 1e-5;
    let tol = 1e-3;
    for i in 0..theta.len() {
        let mut plus = theta.clone();
        let mut minus = theta.clone();
        plus[i] += h;
        minus[i] -= h;
        let g = (end_to_end_loss(&x, &labels, &plus, lambda, gamma_lambda)
            - end_to_end_loss(&x, &labels, &minus, lambda, gamma_lambda))
            / (2.0 * h);
        if constrained[i] && theta[i] == 0.0 {
            assert!(g >= -tol, "coordinate {i} at its bound with gradient {g}");
        } else {
            assert!(g.abs() <= tol, "coordinate {i} gradient {g} (joint kkt {})", joint.kkt_violation);
        }
    }
}

#[test]
fn joint_training_never_worsens_its_objective() {
    let (data, schema) = small_synthetic(1000, 8);
    let config = TrainConfig {
        joint_alpha: 0.5,
        max_iters: 300,
        ..Default::default()
    };
    let specs = schema.feature_specs(&data, None);
    let template = ArmModel::zeroed(specs, schema.partition()).unwrap();
    let matrix = template.binarizer().binarize_rows(&data.rows).unwrap();
    let (two_stage, _) = fit_model(&template, &matrix, &data.labels, None, &TrainConfig::default()).unwrap();
    let problem = JointProblem::new(&two_stage, &matrix, &data.labels, None, 0.5, 1.0, 0.1).unwrap();
    let start = JointProblem::pack(&two_stage);
    let m = minimize(&problem, start.clone(), &problem.bounds(36.0), &config.step_options());
    assert!(m.value <= problem.value(&start));
    assert!(m.trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn joint_and_two_stage_accuracies_are_close() {
    let (data, schema) = small_synthetic(10_000, 1);
    let s = &split(&data.labels, &SplitConfig { n_splits: 1, ..Default::default() }).unwrap()[0];
    let specs = schema.feature_specs(&data, Some(&s.train));
    let template = ArmModel::zeroed(specs, schema.partition()).unwrap();
    let matrix = template.binarizer().binarize_rows(&data.rows).unwrap();
    let two_stage_config = TrainConfig::default();
    let (two_stage, _) = fit_model(&template, &matrix, &data.labels, Some(&s.train), &two_stage_config).unwrap();
    let joint_config = TrainConfig {
        joint_alpha: 0.5,
        max_iters: 1000,
        ..Default::default()
    };
    let (joint, _) = fit_joint(&two_stage, &matrix, &data.labels, Some(&s.train), &joint_config).unwrap();
    let a = accuracy(&two_stage, &matrix, &data.labels, Some(&s.test));
    let b = accuracy(&joint, &matrix, &data.labels, Some(&s.test));
    // About one binomial standard error on 2,000 test rows.
    assert!((a - b).abs() < 0.01, "two-stage {a}, joint {b}");
}

#[test]
fn evaluation_baselines_and_predictable_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rows: Vec<Vec<Option<f64>>> = (0..2000)
        .map(|_| vec![Some(rng.gen_range(0..100) as f64), Some(rng.gen_range(0..100) as f64)])
        .collect();
    let labels: Vec<u8> = rows
        .iter()
        .map(|r| u8::from(r[0].unwrap() < 40.0 || r[1].unwrap() > 70.0))
        .collect();
    let data = RawDataset::new(vec!["a".into(), "b".into()], rows, labels).unwrap();
    let schema = DatasetSchema::from_json(
        r#"{
            "label": {"column": "y", "positive": ["1"], "negative": ["0"]},
            "threshold_quantiles": 100,
            "features": [
                {"name": "a", "monotonicity": "Decreasing"},
                {"name": "b", "monotonicity": "Increasing"}
            ],
            "subscales": [
                {"name": "A", "features": ["a"]},
                {"name": "B", "features": ["b"]}
            ]
        }"#,
    )
    .unwrap();
    let report = evaluate(&data, &schema, &TrainConfig::default(), &SplitConfig::default()).unwrap();
    assert_eq!(report.splits.len(), 5);
    assert!(report.arm.mean >= 0.98, "{report:?}");
    let again = evaluate(&data, &schema, &TrainConfig::default(), &SplitConfig::default()).unwrap();
    assert_eq!(report, again);
}

#[test]
fn majority_baseline_is_one_half_on_balanced_data() {
    let (data, schema) = small_synthetic(2000, 3);
    let report = evaluate(&data, &schema, &TrainConfig::default(), &SplitConfig::default()).unwrap();
    assert!((report.majority.mean - 0.5).abs() < 0.05, "{:?}", report.majority);
    assert!(report.arm.mean > report.majority.mean + 0.1);
}

#[test]
fn single_class_data_is_rejected() {
    let (mut data, schema) = small_synthetic(100, 3);
    data.labels.iter_mut().for_each(|y| *y = 1);
    assert!(evaluate(&data, &schema, &TrainConfig::default(), &SplitConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn projected_gradient_never_increases_the_objective(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (matrix, labels) = random_binary_problem(&mut rng, 50, d);
        let columns: Vec<usize> = (0..d).collect();
        let problem = LogisticProblem::from_binary(&matrix, &columns, &labels, None, 0.5).unwrap();
        let constrained: Vec<bool> = (0..d).map(|_| rng.gen_bool(0.5)).collect();
        let bounds: Bounds = logistic_bounds(&constrained, 36.0);
        let m = minimize(&problem, vec![0.0; d + 1], &bounds, &TrainConfig::default().step_options());
        for w in m.trace.windows(2) {
            // Accepted steps may differ from a true decrease only by rounding.
            prop_assert!(w[1] <= w[0] + 64.0 * f64::EPSILON * w[0].abs());
        }
        for (i, &c) in constrained.iter().enumerate() {
            if c {
                prop_assert!(m.x[i] >= 0.0);
            }
        }
    }
}
