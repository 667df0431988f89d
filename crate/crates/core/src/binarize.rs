//! One-sided step-function binarization of raw features.
//!
//! Each raw feature `p` expands into threshold indicators plus an optional
//! "not missing" indicator. Decreasing features use `1[x < t]`, increasing
//! features `1[x > t]`; with non-negative coefficients both give a monotone
//! piecewise-constant score. The design matrix appends the complement of
//! every original column, so a matrix over `P̃` originals has `2P̃` columns.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Range;

use crate::bits::Bits;
use crate::error::ModelError;

/// A raw feature value; `None` is missing.
pub type RawValue = Option<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Monotonicity {
    /// Risk is non-decreasing in the feature.
    Increasing,
    /// Risk is non-increasing in the feature.
    Decreasing,
    None,
}

/// Per-feature binarization metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub monotonicity: Monotonicity,
    /// Strictly increasing cut points in feature units.
    pub thresholds: Vec<f64>,
    /// Raw values treated as missing.
    #[serde(default)]
    pub missing_codes: Vec<f64>,
    #[serde(default = "default_true")]
    pub include_not_missing_indicator: bool,
}

fn default_true() -> bool {
    true
}

impl FeatureSpec {
    pub fn new(name: impl Into<String>, monotonicity: Monotonicity, thresholds: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            monotonicity,
            thresholds,
            missing_codes: Vec::new(),
            include_not_missing_indicator: true,
        }
    }

    pub fn with_missing_codes(mut self, codes: Vec<f64>) -> Self {
        self.missing_codes = codes;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |reason: &str| ModelError::InvalidSpec {
            feature: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.thresholds.iter().any(|t| !t.is_finite()) {
            return Err(invalid("thresholds must be finite"));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("thresholds must be strictly increasing"));
        }
        Ok(())
    }

    pub fn is_missing(&self, raw: RawValue) -> bool {
        match raw {
            None => true,
            Some(v) => v.is_nan() || self.missing_codes.contains(&v),
        }
    }

    /// Threshold indicators point the same way as the risk: `1[x < t]` for
    /// decreasing (and unconstrained) features, `1[x > t]` for increasing ones.
    pub fn threshold_kind(&self, t: f64) -> BinaryKind {
        match self.monotonicity {
            Monotonicity::Increasing => BinaryKind::Above(t),
            Monotonicity::Decreasing | Monotonicity::None => BinaryKind::Below(t),
        }
    }

    /// Kinds of the original binary features, thresholds first (ascending)
    /// followed by the not-missing indicator.
    pub fn binary_kinds(&self) -> Vec<BinaryKind> {
        let mut kinds: Vec<BinaryKind> = self
            .thresholds
            .iter()
            .map(|&t| self.threshold_kind(t))
            .collect();
        if self.include_not_missing_indicator {
            kinds.push(BinaryKind::NotMissing);
        }
        kinds
    }

    pub fn n_binary(&self) -> usize {
        self.thresholds.len() + usize::from(self.include_not_missing_indicator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BinaryKind {
    /// `1[x < t]`
    Below(f64),
    /// `1[x > t]`
    Above(f64),
    NotMissing,
    /// `1 − value` of the original column with this index.
    Complement(usize),
}

impl BinaryKind {
    /// Value of an original (non-complement) indicator.
    pub fn evaluate(&self, spec: &FeatureSpec, raw: RawValue) -> bool {
        if spec.is_missing(raw) {
            return false;
        }
        let x = raw.expect("non-missing");
        match *self {
            BinaryKind::Below(t) => x < t,
            BinaryKind::Above(t) => x > t,
            BinaryKind::NotMissing => true,
            BinaryKind::Complement(_) => panic!("complement needs its original column"),
        }
    }

    pub fn is_threshold(&self) -> bool {
        matches!(self, BinaryKind::Below(_) | BinaryKind::Above(_))
    }
}

/// One column of the binarized design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryFeature {
    /// Index of the raw feature this column derives from.
    pub parent: usize,
    pub kind: BinaryKind,
    pub display_name: String,
}

fn fmt_threshold(t: f64) -> String {
    format!("{t}")
}

fn display_name(name: &str, kind: &BinaryKind, original: Option<&BinaryKind>) -> String {
    match (kind, original) {
        (BinaryKind::Below(t), _) => format!("{name} < {}", fmt_threshold(*t)),
        (BinaryKind::Above(t), _) => format!("{name} > {}", fmt_threshold(*t)),
        (BinaryKind::NotMissing, _) => format!("{name} is not missing"),
        (BinaryKind::Complement(_), Some(BinaryKind::Below(t))) => {
            format!("{name} ≥ {} or missing", fmt_threshold(*t))
        }
        (BinaryKind::Complement(_), Some(BinaryKind::Above(t))) => {
            format!("{name} ≤ {} or missing", fmt_threshold(*t))
        }
        (BinaryKind::Complement(_), Some(BinaryKind::NotMissing)) => format!("{name} is missing"),
        (BinaryKind::Complement(_), _) => format!("NOT {name}"),
    }
}

/// Binarizes a single raw value over `spec`'s original binary features.
///
/// Missing values zero every indicator, including not-missing.
pub fn binarize_value(spec: &FeatureSpec, raw: RawValue) -> Vec<u8> {
    spec.binary_kinds()
        .iter()
        .map(|k| u8::from(k.evaluate(spec, raw)))
        .collect()
}

/// Maps raw rows onto the `[X, X^c]` design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Binarizer {
    specs: Vec<FeatureSpec>,
    features: Vec<BinaryFeature>,
    ranges: Vec<Range<usize>>,
}

impl Binarizer {
    pub fn new(specs: Vec<FeatureSpec>) -> Result<Self, ModelError> {
        let mut features = Vec::new();
        let mut ranges = Vec::with_capacity(specs.len());
        for (p, spec) in specs.iter().enumerate() {
            spec.validate()?;
            let start = features.len();
            for kind in spec.binary_kinds() {
                features.push(BinaryFeature {
                    parent: p,
                    kind,
                    display_name: display_name(&spec.name, &kind, None),
                });
            }
            ranges.push(start..features.len());
        }
        let mut seen = std::collections::HashSet::new();
        for spec in &specs {
            if !seen.insert(spec.name.as_str()) {
                return Err(ModelError::InvalidSpec {
                    feature: spec.name.clone(),
                    reason: "duplicate feature name".into(),
                });
            }
        }
        Ok(Self {
            specs,
            features,
            ranges,
        })
    }

    pub fn specs(&self) -> &[FeatureSpec] {
        &self.specs
    }

    pub fn n_features(&self) -> usize {
        self.specs.len()
    }

    /// Number of original binary columns (`P̃`).
    pub fn n_original(&self) -> usize {
        self.features.len()
    }

    /// Width of the design matrix including complements (`2P̃`).
    pub fn n_columns(&self) -> usize {
        2 * self.features.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    /// Original columns belonging to raw feature `p`.
    pub fn columns_of(&self, p: usize) -> Range<usize> {
        self.ranges[p].clone()
    }

    pub fn originals(&self) -> &[BinaryFeature] {
        &self.features
    }

    /// Describes any column of the design matrix, complements included.
    pub fn column(&self, j: usize) -> BinaryFeature {
        let n = self.features.len();
        if j < n {
            self.features[j].clone()
        } else {
            let orig = &self.features[j - n];
            let kind = BinaryKind::Complement(j - n);
            BinaryFeature {
                parent: orig.parent,
                kind,
                display_name: display_name(&self.specs[orig.parent].name, &kind, Some(&orig.kind)),
            }
        }
    }

    pub fn column_name(&self, j: usize) -> String {
        self.column(j).display_name
    }

    /// True for threshold columns of monotone features, whose coefficients
    /// are constrained to be non-negative.
    pub fn is_constrained(&self, j: usize) -> bool {
        let f = &self.features[j];
        f.kind.is_threshold() && self.specs[f.parent].monotonicity != Monotonicity::None
    }

    /// Binarizes a raw row into a `2P̃`-bit pattern.
    pub fn binarize_row(&self, raw: &[RawValue]) -> Result<Bits, ModelError> {
        if raw.len() != self.specs.len() {
            return Err(ModelError::ColumnCountMismatch {
                expected: self.specs.len(),
                found: raw.len(),
            });
        }
        let n = self.features.len();
        let mut bits = Bits::zeros(2 * n);
        for (j, f) in self.features.iter().enumerate() {
            let spec = &self.specs[f.parent];
            if f.kind.evaluate(spec, raw[f.parent]) {
                bits.set(j, true);
            } else {
                bits.set(n + j, true);
            }
        }
        Ok(bits)
    }

    pub fn binarize_rows(&self, rows: &[Vec<RawValue>]) -> Result<BinarizedMatrix, ModelError> {
        let bits = rows
            .iter()
            .map(|r| self.binarize_row(r))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BinarizedMatrix::from_rows(self.n_original(), bits))
    }
}

/// Binarizes a raw dataset against `specs`.
pub fn binarize_dataset(
    specs: &[FeatureSpec],
    rows: &[Vec<RawValue>],
) -> Result<BinarizedMatrix, ModelError> {
    Binarizer::new(specs.to_vec())?.binarize_rows(rows)
}

/// The `N × 2P̃` design matrix `[X, X^c]`, stored both row- and column-major.
#[derive(Clone, PartialEq)]
pub struct BinarizedMatrix {
    n_original: usize,
    rows: Vec<Bits>,
    columns: Vec<Bits>,
}

impl BinarizedMatrix {
    pub fn from_rows(n_original: usize, rows: Vec<Bits>) -> Self {
        let n_cols = 2 * n_original;
        let mut columns = vec![Bits::zeros(rows.len()); n_cols];
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n_cols, "row {i} has wrong width");
            for j in row.iter_ones() {
                columns[j].set(i, true);
            }
        }
        Self {
            n_original,
            rows,
            columns,
        }
    }

    /// Builds from original columns only; complements are derived.
    pub fn from_originals(n_original: usize, originals: &[Vec<u8>]) -> Self {
        let rows = originals
            .iter()
            .map(|r| {
                assert_eq!(r.len(), n_original);
                Bits::from_fn(2 * n_original, |j| {
                    if j < n_original {
                        r[j] == 1
                    } else {
                        r[j - n_original] == 0
                    }
                })
            })
            .collect();
        Self::from_rows(n_original, rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_original(&self) -> usize {
        self.n_original
    }

    pub fn n_columns(&self) -> usize {
        2 * self.n_original
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    pub fn row(&self, i: usize) -> &Bits {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Bits] {
        &self.rows
    }

    /// Rows where column `j` is 1.
    pub fn column(&self, j: usize) -> &Bits {
        &self.columns[j]
    }

    /// Content hash over the packed rows.
    pub fn content_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.rows.len() * 8);
        out.extend_from_slice(&(self.n_original as u64).to_le_bytes());
        for r in &self.rows {
            out.extend(r.to_bytes());
        }
        out
    }
}

impl fmt::Debug for BinarizedMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BinarizedMatrix")
            .field("n_rows", &self.rows.len())
            .field("n_columns", &self.n_columns())
            .finish()
    }
}
