//! HTTP handlers.
//!
//! ```text
//! GET  /health
//! GET  /model            topology and scoring tables, ETag = model hash
//! POST /predict          {"features": {name: number | "missing" | null}}
//! POST /explain          same body; rule with support and all four settings
//! POST /cases            same body; prior cases satisfying the rule
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use arm_core::{Bits, Prediction, RawValue};
use arm_explain::{
    similar_cases, verify_rule, CascadeStep, DbEntry, EntrySource, ExplainError, Explanation, LabelNames, Optimality,
    Setting, SettingSummary,
};
use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tower_http::services::ServeDir;

use crate::state::{AppState, Loaded};

pub const DEFAULT_CASES: usize = 5;

#[derive(Debug, Deserialize)]
pub struct FeaturesRequest {
    pub features: BTreeMap<String, Value>,
    /// Number of cases for `/cases`.
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct PredictResponse {
    pub model_hash: String,
    #[serde(flatten)]
    pub prediction: Prediction,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Condition {
    pub column: usize,
    pub condition: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleView {
    pub conditions: Vec<Condition>,
    pub text: String,
    pub label: u8,
    pub label_name: String,
    pub sparsity: usize,
    pub support: usize,
    pub optimality: Optimality,
}

#[derive(Debug, Serialize)]
pub struct ExplainResponse {
    pub model_hash: String,
    pub rule: RuleView,
    pub step: CascadeStep,
    pub setting: Setting,
    pub threshold: usize,
    pub settings: Vec<SettingSummary>,
    /// Consistency re-checked against the reference data before sending.
    pub verified: bool,
}

#[derive(Debug, Serialize)]
pub struct CaseRow {
    pub row: Option<usize>,
    pub values: Vec<RawValue>,
    pub label: u8,
    pub probability: f64,
    pub shared_features: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct CasesResponse {
    pub model_hash: String,
    pub columns: Vec<String>,
    pub query: CaseRow,
    pub rule: RuleView,
    pub step: CascadeStep,
    pub cases: Vec<CaseRow>,
}

#[derive(Debug)]
pub enum ApiError {
    NoModel,
    NoReferenceData,
    InvalidRequest(String),
    UnknownFeature(Vec<String>),
    MissingFeature(Vec<String>),
    InvalidValue(Vec<String>),
    Outlier,
    Internal(String),
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    features: Vec<String>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, error, message, features) = match self {
            ApiError::NoModel => (StatusCode::SERVICE_UNAVAILABLE, "NoModel", "no model is loaded".to_string(), vec![]),
            ApiError::NoReferenceData => (
                StatusCode::SERVICE_UNAVAILABLE,
                "NoReferenceData",
                "explanations need the server to be started with --data".to_string(),
                vec![],
            ),
            ApiError::InvalidRequest(m) => (StatusCode::BAD_REQUEST, "InvalidRequest", m, vec![]),
            ApiError::UnknownFeature(f) => {
                (StatusCode::BAD_REQUEST, "UnknownFeature", format!("unknown features: {}", f.join(", ")), f)
            }
            ApiError::MissingFeature(f) => {
                (StatusCode::BAD_REQUEST, "MissingFeature", format!("missing features: {}", f.join(", ")), f)
            }
            ApiError::InvalidValue(f) => (
                StatusCode::BAD_REQUEST,
                "InvalidValue",
                format!("values must be numbers, null or \"missing\": {}", f.join(", ")),
                f,
            ),
            ApiError::Outlier => (
                StatusCode::UNPROCESSABLE_ENTITY,
                "Outlier",
                ExplainError::Outlier.to_string(),
                vec![],
            ),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, "Internal", m, vec![]),
        };
        (status, Json(ErrorBody { error, message, features })).into_response()
    }
}

impl From<ExplainError> for ApiError {
    fn from(e: ExplainError) -> Self {
        match e {
            ExplainError::Outlier | ExplainError::InfeasibleExplanation { .. } => ApiError::Outlier,
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::InvalidRequest(e.body_text())
    }
}

type Shared = Arc<AppState>;

pub fn router(state: Shared, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/model", get(model))
        .route("/predict", post(predict))
        .route("/explain", post(explain))
        .route("/cases", post(cases))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

fn loaded(state: &AppState) -> Result<&Loaded, ApiError> {
    state.model.as_ref().ok_or(ApiError::NoModel)
}

/// Raw values in model feature order.
pub fn parse_features(loaded: &Loaded, features: &BTreeMap<String, Value>) -> Result<Vec<RawValue>, ApiError> {
    let specs = loaded.model.specs();
    let unknown: Vec<String> = features
        .keys()
        .filter(|k| !specs.iter().any(|s| &s.name == *k))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(ApiError::UnknownFeature(unknown));
    }
    let missing: Vec<String> = specs
        .iter()
        .filter(|s| !features.contains_key(&s.name))
        .map(|s| s.name.clone())
        .collect();
    if !missing.is_empty() {
        return Err(ApiError::MissingFeature(missing));
    }
    let mut invalid = Vec::new();
    let raw: Vec<RawValue> = specs
        .iter()
        .map(|s| match &features[&s.name] {
            Value::Null => None,
            Value::Number(n) => n.as_f64(),
            Value::String(t) if t.eq_ignore_ascii_case("missing") => None,
            Value::String(t) => t.trim().parse::<f64>().ok().filter(|v| v.is_finite()).or_else(|| {
                invalid.push(s.name.clone());
                None
            }),
            _ => {
                invalid.push(s.name.clone());
                None
            }
        })
        .collect();
    if !invalid.is_empty() {
        return Err(ApiError::InvalidValue(invalid));
    }
    // Missing codes become missing, matching how datasets are loaded.
    Ok(specs
        .iter()
        .zip(raw)
        .map(|(s, v): (_, RawValue)| v.filter(|_| !s.is_missing(v)))
        .collect())
}

async fn health(State(state): State<Shared>) -> Json<Value> {
    let model = state.model.as_ref();
    Json(serde_json::json!({
        "status": "ok",
        "model_loaded": model.is_some(),
        "model_hash": model.map(|m| m.hash.clone()),
        "reference_rows": model.and_then(|m| m.explainer.as_ref()).map(|e| e.reference().n_rows()),
        "db_entries": model.and_then(|m| m.db.as_ref()).map(|db| db.read().expect("db lock poisoned").len()),
    }))
}

async fn model(State(state): State<Shared>, headers: HeaderMap) -> Result<Response, ApiError> {
    let loaded = loaded(&state)?;
    let etag = HeaderValue::from_str(&format!("\"{}\"", loaded.hash)).expect("hex is a valid header");
    if headers.get(header::IF_NONE_MATCH) == Some(&etag) {
        return Ok((StatusCode::NOT_MODIFIED, [(header::ETAG, etag)]).into_response());
    }
    Ok((
        [(header::ETAG, etag), (header::CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        loaded.topology.clone(),
    )
        .into_response())
}

async fn predict(
    State(state): State<Shared>,
    body: Result<Json<FeaturesRequest>, JsonRejection>,
) -> Result<Json<PredictResponse>, ApiError> {
    let Json(request) = body?;
    let loaded = loaded(&state)?;
    let raw = parse_features(loaded, &request.features)?;
    let prediction = loaded.model.predict(&raw).map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(Json(PredictResponse {
        model_hash: loaded.hash.clone(),
        prediction,
    }))
}

fn rule_view(loaded: &Loaded, rule: &arm_explain::Rule) -> RuleView {
    let binarizer = loaded.model.binarizer();
    let names = LabelNames::default();
    RuleView {
        conditions: rule
            .features
            .iter()
            .map(|&j| Condition {
                column: j,
                condition: binarizer.column_name(j),
            })
            .collect(),
        text: rule.render(binarizer, &names),
        label: rule.label,
        label_name: names.name(rule.label).to_string(),
        sparsity: rule.sparsity,
        support: rule.support,
        optimality: rule.optimality,
    }
}

/// Runs the cascade on a blocking thread. Novel observations are added to
/// the database when write-through is on.
async fn run_cascade(state: Shared, raw: Vec<RawValue>) -> Result<(Bits, Explanation), ApiError> {
    tokio::task::spawn_blocking(move || {
        let loaded = loaded(&state)?;
        let explainer = loaded.explainer.as_ref().ok_or(ApiError::NoReferenceData)?;
        let x = loaded.model.binarize(&raw).map_err(|e| ApiError::Internal(e.to_string()))?;
        let cached = loaded
            .db
            .as_ref()
            .and_then(|db| explainer.cached(&x, &db.read().expect("db lock poisoned")));
        let explanation = match cached {
            Some(rules) => explainer.select(&x, &rules, true)?,
            None => {
                let rules = explainer.solve(&x)?;
                if let (true, Some(db)) = (loaded.write_through, &loaded.db) {
                    let entry = DbEntry {
                        label: explainer.label_of(&x),
                        source: EntrySource::Request,
                        rules: Some(rules.clone()),
                        error: None,
                    };
                    db.write().expect("db lock poisoned").insert(&x, entry);
                    loaded.mark_dirty();
                }
                explainer.select(&x, &rules, false)?
            }
        };
        let reference = explainer.reference();
        let check = verify_rule(&explanation.rule, reference.matrix(), reference.model_labels());
        if !check.consistent || check.support != explanation.rule.support || !explanation.rule.is_relevant(&x) {
            return Err(ApiError::Internal("explanation failed verification".into()));
        }
        Ok((x, explanation))
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn explain(
    State(state): State<Shared>,
    body: Result<Json<FeaturesRequest>, JsonRejection>,
) -> Result<Json<ExplainResponse>, ApiError> {
    let Json(request) = body?;
    let raw = parse_features(loaded(&state)?, &request.features)?;
    let (_, e) = run_cascade(state.clone(), raw).await?;
    let loaded = loaded(&state)?;
    Ok(Json(ExplainResponse {
        model_hash: loaded.hash.clone(),
        rule: rule_view(loaded, &e.rule),
        step: e.step,
        setting: e.setting,
        threshold: e.threshold,
        settings: e.settings,
        verified: true,
    }))
}

async fn cases(
    State(state): State<Shared>,
    body: Result<Json<FeaturesRequest>, JsonRejection>,
) -> Result<Json<CasesResponse>, ApiError> {
    let Json(request) = body?;
    let raw = parse_features(loaded(&state)?, &request.features)?;
    let (x, e) = run_cascade(state.clone(), raw.clone()).await?;
    let loaded = loaded(&state)?;
    let explainer = loaded.explainer.as_ref().ok_or(ApiError::NoReferenceData)?;
    let reference = explainer.reference();
    let own_row = reference.find_row(&raw);
    let k = request.k.unwrap_or(DEFAULT_CASES);
    let found = similar_cases(
        &x,
        &e.rule,
        reference.matrix(),
        reference.rows(),
        reference.model_labels(),
        k,
        own_row,
    );
    let mut rows = Vec::with_capacity(found.len());
    for c in found {
        let bits = reference.matrix().row(c.row);
        if !e.rule.matches(bits) || c.label != e.rule.label {
            return Err(ApiError::Internal(format!("case {} does not satisfy the rule", c.row)));
        }
        rows.push(CaseRow {
            row: Some(c.row),
            values: c.values,
            label: c.label,
            probability: loaded.model.probability_bits(bits),
            shared_features: Some(c.shared_features),
        });
    }
    Ok(Json(CasesResponse {
        model_hash: loaded.hash.clone(),
        columns: loaded.model.specs().iter().map(|s| s.name.clone()).collect(),
        query: CaseRow {
            row: own_row,
            label: explainer.label_of(&x),
            probability: loaded.model.probability_bits(&x),
            values: raw,
            shared_features: None,
        },
        rule: rule_view(loaded, &e.rule),
        step: e.step,
        cases: rows,
    }))
}
