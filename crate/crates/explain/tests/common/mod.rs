#![allow(dead_code)]

use arm_core::data::{generate_synthetic, RawDataset, SyntheticSpec};
use arm_core::{train_model, ArmModel, FeatureSpec, Monotonicity, RawValue, Subscale, TrainConfig};
use arm_explain::{CascadeConfig, Explainer, ReferenceData};

/// High risk exactly when `a < 50` and `b < 50`; `c` carries no weight but
/// makes every row distinct.
pub fn toy_model() -> ArmModel {
    let specs = vec![
        FeatureSpec::new("a", Monotonicity::Decreasing, vec![50.0]),
        FeatureSpec::new("b", Monotonicity::Decreasing, vec![50.0]),
        FeatureSpec::new("c", Monotonicity::None, vec![500.0, 1000.0]),
    ];
    // Columns: a<50, a not missing, b<50, b not missing, c<500, c<1000, c not missing.
    let subscale = Subscale {
        name: "All".into(),
        features: vec![0, 1, 2],
        coefficients: vec![3.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0],
        bias: -4.5,
    };
    ArmModel::new(specs, vec![subscale], vec![1.0], -0.5).unwrap()
}

/// 700 rows in the high-risk quadrant and 300 in each of the others. No
/// high-risk row has `c` in [500, 1000), while the others spread over all
/// of `c`.
pub fn toy_data() -> RawDataset {
    let quadrants = [(10.0, 10.0, 700), (10.0, 90.0, 300), (90.0, 10.0, 300), (90.0, 90.0, 300)];
    let mut rows = Vec::new();
    for (a, b, n) in quadrants {
        for j in 0..n {
            let c = if a < 50.0 && b < 50.0 {
                if j < n / 2 { j } else { 1000 + j }
            } else {
                (j * 7) % 1600
            };
            rows.push(vec![Some(a), Some(b), Some(c as f64)]);
        }
    }
    let labels = rows.iter().map(|r| u8::from(r[0] < Some(50.0) && r[1] < Some(50.0))).collect();
    RawDataset::new(vec!["a".into(), "b".into(), "c".into()], rows, labels).unwrap()
}

pub fn explainer(model: &ArmModel, data: &RawDataset) -> Explainer {
    Explainer::new(model.clone(), ReferenceData::new(model, data).unwrap(), CascadeConfig::default())
}

/// A model trained on synthetic data of `n` rows.
pub fn trained(n: usize, seed: u64) -> (ArmModel, RawDataset) {
    let spec = SyntheticSpec::fico_like(n, seed);
    let data = generate_synthetic(&spec).unwrap();
    let (model, _) = train_model(&data, &spec.schema(), &TrainConfig::default(), None).unwrap();
    (model, data)
}

pub fn first_rows(data: &RawDataset, n: usize) -> RawDataset {
    let idx: Vec<usize> = (0..n.min(data.n_rows())).collect();
    data.subset(&idx)
}

pub fn raw(values: &[f64]) -> Vec<RawValue> {
    values.iter().map(|&v| Some(v)).collect()
}
