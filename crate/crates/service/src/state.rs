//! Everything the server holds in memory: the model, its reference data and
//! the optional explanation database.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::RwLock;

use anyhow::{bail, Context, Result};
use arm_core::data::{load_csv, DatasetSchema, RawDataset};
use arm_core::{deserialize_model, model_hash, ArmModel};
use arm_explain::{CascadeConfig, Explainer, ExplanationDb, ReferenceData};

use crate::topology::ModelTopology;

/// A loaded model and what is needed to explain its predictions.
pub struct Loaded {
    pub model: ArmModel,
    pub hash: String,
    /// Serialized `/model` body; computed once since the model is immutable.
    pub topology: String,
    pub explainer: Option<Explainer>,
    pub db: Option<RwLock<ExplanationDb>>,
    pub db_path: Option<PathBuf>,
    pub write_through: bool,
    dirty: AtomicBool,
}

impl Loaded {
    pub fn new(model: ArmModel) -> Self {
        let hash = model_hash(&model);
        let topology =
            serde_json::to_string(&ModelTopology::new(&model, &hash)).expect("topology serializes");
        Self {
            model,
            hash,
            topology,
            explainer: None,
            db: None,
            db_path: None,
            write_through: false,
            dirty: AtomicBool::new(false),
        }
    }

    /// Attaches reference data for explanations and case retrieval.
    pub fn with_reference(mut self, data: &RawDataset, config: CascadeConfig) -> Result<Self> {
        let reference = ReferenceData::new(&self.model, data)?;
        self.explainer = Some(Explainer::new(self.model.clone(), reference, config));
        Ok(self)
    }

    /// Attaches a database built for this model and reference data.
    pub fn with_db(mut self, db: ExplanationDb, path: Option<PathBuf>, write_through: bool) -> Result<Self> {
        let Some(explainer) = &self.explainer else {
            bail!("an explanation database needs reference data");
        };
        db.ensure_matches(explainer)?;
        self.db = Some(RwLock::new(db));
        self.db_path = path;
        self.write_through = write_through;
        Ok(self)
    }

    pub fn mark_dirty(&self) {
        self.dirty.store(true, Ordering::Release);
    }

    /// Writes the database back to its file if write-through added entries.
    pub fn flush(&self) -> Result<()> {
        let (Some(db), Some(path)) = (&self.db, &self.db_path) else {
            return Ok(());
        };
        if self.dirty.swap(false, Ordering::AcqRel) {
            let db = db.read().expect("db lock poisoned");
            db.save(path).with_context(|| format!("saving {}", path.display()))?;
            tracing::info!(entries = db.len(), path = %path.display(), "saved explanation db");
        }
        Ok(())
    }
}

/// Shared server state. `model` is `None` when started without one.
#[derive(Default)]
pub struct AppState {
    pub model: Option<Loaded>,
}

impl AppState {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_model(loaded: Loaded) -> Self {
        Self { model: Some(loaded) }
    }
}

pub fn load_model(path: &Path) -> Result<ArmModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    deserialize_model(&text).with_context(|| format!("loading model {}", path.display()))
}

/// Reads a dataset CSV. Without an explicit schema the model's own feature
/// layout is used with the HELOC label column.
pub fn load_dataset(path: &Path, schema: Option<&Path>, model: Option<&ArmModel>) -> Result<RawDataset> {
    let schema = match (schema, model) {
        (Some(p), _) => DatasetSchema::load(p).with_context(|| format!("loading schema {}", p.display()))?,
        (None, Some(m)) => DatasetSchema::from_model(m, DatasetSchema::fico().label),
        (None, None) => DatasetSchema::fico(),
    };
    load_csv(path, &schema).with_context(|| format!("loading {}", path.display()))
}
