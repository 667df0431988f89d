#![allow(dead_code)]

use std::sync::Arc;

use arm_core::data::{generate_synthetic, RawDataset, SyntheticSpec};
use arm_core::{train_model, ArmModel, FeatureSpec, Monotonicity, RawValue, Subscale, TrainConfig};
use arm_explain::{build_explanation_db, BuildOptions, CascadeConfig, ExplanationDb};
use arm_service::{router, AppState, Loaded};
use serde_json::{json, Map, Value};

pub fn trained(n: usize, seed: u64) -> (ArmModel, RawDataset) {
    let spec = SyntheticSpec::fico_like(n, seed);
    let data = generate_synthetic(&spec).unwrap();
    let (model, _) = train_model(&data, &spec.schema(), &TrainConfig::default(), None).unwrap();
    (model, data)
}

pub fn first_rows(data: &RawDataset, n: usize) -> RawDataset {
    data.subset(&(0..n.min(data.n_rows())).collect::<Vec<_>>())
}

pub fn build_db(loaded: &Loaded) -> ExplanationDb {
    let explainer = loaded.explainer.as_ref().unwrap();
    build_explanation_db(explainer, &BuildOptions::default(), None, |_, _, _| Ok(())).unwrap().0
}

/// Starts the API on an ephemeral port and returns its base URL.
pub async fn spawn(state: AppState, static_dir: Option<std::path::PathBuf>) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(Arc::new(state), static_dir);
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

/// Request body for a raw row in model feature order.
pub fn payload(model: &ArmModel, raw: &[RawValue]) -> Value {
    let features: Map<String, Value> = model
        .specs()
        .iter()
        .zip(raw)
        .map(|(s, v)| (s.name.clone(), v.map_or(json!("missing"), |x| json!(x))))
        .collect();
    json!({ "features": features })
}

/// High risk exactly when `a < 50` and `b < 50`.
pub fn toy_model() -> ArmModel {
    let specs = vec![
        FeatureSpec::new("a", Monotonicity::Decreasing, vec![50.0]),
        FeatureSpec::new("b", Monotonicity::Decreasing, vec![50.0]),
    ];
    let subscale = Subscale {
        name: "All".into(),
        features: vec![0, 1],
        coefficients: vec![3.0, 0.0, 3.0, 0.0],
        bias: -4.5,
    };
    ArmModel::new(specs, vec![subscale], vec![1.0], -0.5).unwrap()
}

/// Only low-risk rows, so a high-risk query has no supported rule.
pub fn toy_low_risk_data() -> RawDataset {
    let mut rows = Vec::new();
    for (a, b) in [(10.0, 90.0), (90.0, 10.0), (90.0, 90.0)] {
        for _ in 0..50 {
            rows.push(vec![Some(a), Some(b)]);
        }
    }
    let labels = vec![0; rows.len()];
    RawDataset::new(vec!["a".into(), "b".into()], rows, labels).unwrap()
}

pub fn toy_state() -> AppState {
    let loaded = Loaded::new(toy_model()).with_reference(&toy_low_risk_data(), CascadeConfig::default()).unwrap();
    AppState::with_model(loaded)
}
