//! Precomputed rules keyed by binarized pattern.
//!
//! A database belongs to one model and one reference dataset, identified by
//! their hashes. Building is resumable: existing entries are kept and only
//! missing patterns are solved.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use arm_core::{Bits, RawValue};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{Explainer, RuleSet};
use crate::error::ExplainError;

pub const DB_FORMAT: &str = "arm-explanation-db";
pub const DB_VERSION: u32 = 1;

/// Where an entry's pattern came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntrySource {
    Row { index: usize },
    Random,
    Request,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbEntry {
    pub label: u8,
    pub source: EntrySource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<RuleSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationDb {
    pub format: String,
    pub version: u32,
    pub model_hash: String,
    pub dataset_hash: String,
    /// Keyed by the hex of the binarized pattern.
    pub entries: BTreeMap<String, DbEntry>,
}

impl ExplanationDb {
    pub fn new(model_hash: impl Into<String>, dataset_hash: impl Into<String>) -> Self {
        Self {
            format: DB_FORMAT.into(),
            version: DB_VERSION,
            model_hash: model_hash.into(),
            dataset_hash: dataset_hash.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn for_explainer(explainer: &Explainer) -> Self {
        Self::new(explainer.model_hash(), explainer.reference().hash())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, x: &Bits) -> Option<&DbEntry> {
        self.entries.get(&x.to_hex())
    }

    pub fn insert(&mut self, x: &Bits, entry: DbEntry) {
        self.entries.insert(x.to_hex(), entry);
    }

    pub fn matches(&self, explainer: &Explainer) -> bool {
        self.model_hash == explainer.model_hash() && self.dataset_hash == explainer.reference().hash()
    }

    pub fn ensure_matches(&self, explainer: &Explainer) -> Result<(), ExplainError> {
        if self.model_hash != explainer.model_hash() {
            return Err(ExplainError::DbMismatch(format!(
                "built for model {}, loaded model is {}",
                self.model_hash,
                explainer.model_hash()
            )));
        }
        if self.dataset_hash != explainer.reference().hash() {
            return Err(ExplainError::DbMismatch(format!(
                "built for dataset {}, loaded dataset is {}",
                self.dataset_hash,
                explainer.reference().hash()
            )));
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self, ExplainError> {
        let db: Self = serde_json::from_str(json).map_err(|e| ExplainError::MalformedDb(e.to_string()))?;
        if db.format != DB_FORMAT {
            return Err(ExplainError::MalformedDb(format!("unknown format `{}`", db.format)));
        }
        if db.version != DB_VERSION {
            return Err(ExplainError::MalformedDb(format!("unsupported version {}", db.version)));
        }
        Ok(db)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("databases serialize")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExplainError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Writes to a sibling temporary file, then renames over `path`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ExplainError> {
        let path = path.as_ref();
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(self.to_json().as_bytes())?;
        file.sync_all()?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildOptions {
    /// Extra observations sampled feature by feature from the reference
    /// data's raw marginals.
    pub n_random: usize,
    pub seed: u64,
    /// Entries solved between checkpoint callbacks.
    pub checkpoint_every: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            n_random: 0,
            seed: 7,
            checkpoint_every: 256,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    /// Patterns solved in this run.
    pub solved: usize,
    /// Patterns already present and kept.
    pub reused: usize,
    /// Entries whose solve failed; recorded, not fatal.
    pub failed: usize,
    /// Entries discarded because the model or dataset changed.
    pub stale: usize,
    /// Of the stale entries, those whose rules no longer verified.
    pub invalidated: usize,
}

/// Observations drawn independently per feature from the raw values of the
/// reference rows, missing values included.
pub fn sample_observations(explainer: &Explainer, n: usize, seed: u64) -> Vec<Vec<RawValue>> {
    let rows = explainer.reference().rows();
    if rows.is_empty() {
        return Vec::new();
    }
    let n_features = rows[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..n_features).map(|p| rows[rng.gen_range(0..rows.len())][p]).collect())
        .collect()
}

fn solve_entry(explainer: &Explainer, x: &Bits, source: EntrySource) -> DbEntry {
    let label = explainer.label_of(x);
    match explainer.solve(x) {
        Ok(rules) => DbEntry {
            label,
            source,
            rules: Some(rules),
            error: None,
        },
        Err(e) => DbEntry {
            label,
            source,
            rules: None,
            error: Some(e.to_string()),
        },
    }
}

/// Solves and caches `x` unless a valid entry already exists.
pub fn write_through(explainer: &Explainer, db: &mut ExplanationDb, x: &Bits) -> bool {
    if explainer.cached(x, db).is_some() {
        return false;
    }
    db.insert(x, solve_entry(explainer, x, EntrySource::Request));
    true
}

/// Builds or resumes a database of rules for every distinct reference
/// pattern plus `options.n_random` sampled observations.
///
/// `resume` entries are kept when the hashes match. Otherwise every entry
/// is re-verified against the current data, counted, and recomputed.
/// `checkpoint(db, done, total)` runs after each batch.
pub fn build_explanation_db(
    explainer: &Explainer,
    options: &BuildOptions,
    resume: Option<ExplanationDb>,
    mut checkpoint: impl FnMut(&ExplanationDb, usize, usize) -> Result<(), ExplainError>,
) -> Result<(ExplanationDb, BuildReport), ExplainError> {
    let mut report = BuildReport::default();
    let mut db = match resume {
        Some(db) if db.matches(explainer) => db,
        Some(old) => {
            report.stale = old.len();
            report.invalidated = old
                .entries
                .iter()
                .filter(|(key, entry)| {
                    let Some(rules) = &entry.rules else { return false };
                    let Some(x) = pattern_of(explainer, key) else { return true };
                    rules.iter().any(|(_, r)| !explainer.is_valid(r, &x))
                })
                .count();
            tracing::info!(stale = report.stale, invalidated = report.invalidated, "model or dataset changed; rebuilding");
            ExplanationDb::for_explainer(explainer)
        }
        None => ExplanationDb::for_explainer(explainer),
    };

    let matrix = explainer.reference().matrix();
    let mut seen: HashSet<String> = HashSet::new();
    let mut todo: Vec<(Bits, EntrySource)> = Vec::new();
    let mut push = |x: Bits, source: EntrySource, db: &ExplanationDb, report: &mut BuildReport| {
        let key = x.to_hex();
        if !seen.insert(key.clone()) {
            return;
        }
        if db.entries.contains_key(&key) {
            report.reused += 1;
        } else {
            todo.push((x, source));
        }
    };
    for (i, row) in matrix.rows().iter().enumerate() {
        push(row.clone(), EntrySource::Row { index: i }, &db, &mut report);
    }
    let binarizer = explainer.model().binarizer();
    for raw in sample_observations(explainer, options.n_random, options.seed) {
        let x = binarizer.binarize_row(&raw)?;
        push(x, EntrySource::Random, &db, &mut report);
    }

    let total = todo.len();
    let batch = options.checkpoint_every.max(1);
    for (done, chunk) in todo.chunks(batch).enumerate() {
        let entries: Vec<DbEntry> = chunk
            .par_iter()
            .map(|(x, source)| solve_entry(explainer, x, *source))
            .collect();
        for ((x, _), entry) in chunk.iter().zip(entries) {
            if entry.error.is_some() {
                report.failed += 1;
            }
            report.solved += 1;
            db.insert(x, entry);
        }
        let finished = (done * batch + chunk.len()).min(total);
        tracing::info!(finished, total, "explanation db progress");
        checkpoint(&db, finished, total)?;
    }
    Ok((db, report))
}

/// Rebuilds the bit pattern stored under `key`.
fn pattern_of(explainer: &Explainer, key: &str) -> Option<Bits> {
    Bits::from_hex(explainer.reference().matrix().n_columns(), key)
}
