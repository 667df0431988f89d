//! Scoring-table form of a feature's step functions.
//!
//! A sum of one-sided indicators is piecewise constant, so each feature's
//! contribution can be listed as points per interval. Interval points are
//! accumulated over the active columns in column order, the same order
//! [`ArmModel::feature_points`] uses, so table lookups match the step-function
//! sum bit for bit.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::binarize::{BinaryKind, RawValue};
use crate::error::ModelError;
use crate::model::ArmModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: Option<f64>,
    pub lower_inclusive: bool,
    pub upper: Option<f64>,
    pub upper_inclusive: bool,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        let above = match self.lower {
            None => true,
            Some(l) if self.lower_inclusive => x >= l,
            Some(l) => x > l,
        };
        let below = match self.upper {
            None => true,
            Some(u) if self.upper_inclusive => x <= u,
            Some(u) => x < u,
        };
        above && below
    }

    pub fn label(&self) -> String {
        match (self.lower, self.upper) {
            (None, None) => "any value".to_string(),
            (None, Some(u)) => format!("{} {u}", if self.upper_inclusive { "≤" } else { "<" }),
            (Some(l), None) => format!("{} {l}", if self.lower_inclusive { "≥" } else { ">" }),
            (Some(l), Some(u)) => format!(
                "{}{l}, {u}{}",
                if self.lower_inclusive { "[" } else { "(" },
                if self.upper_inclusive { "]" } else { ")" }
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TableRange {
    Interval(Interval),
    Missing,
}

impl TableRange {
    pub fn label(&self) -> String {
        match self {
            TableRange::Interval(i) => i.label(),
            TableRange::Missing => "missing".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringRow {
    pub range: TableRange,
    pub points: f64,
}

/// Points per interval for one feature of one subscale. Intervals are in
/// increasing feature order, followed by the missing row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringTable {
    pub feature: String,
    pub subscale: String,
    pub rows: Vec<ScoringRow>,
    #[serde(skip)]
    missing_codes: Vec<f64>,
}

impl ScoringTable {
    pub fn lookup(&self, raw: RawValue) -> f64 {
        let missing = match raw {
            None => true,
            Some(v) => v.is_nan() || self.missing_codes.contains(&v),
        };
        let range = match raw {
            Some(x) if !missing => self
                .rows
                .iter()
                .find(|r| matches!(r.range, TableRange::Interval(i) if i.contains(x))),
            _ => self.rows.iter().find(|r| r.range == TableRange::Missing),
        };
        range.expect("intervals cover the real line").points
    }

    /// Index of the row a value falls into.
    pub fn row_index(&self, raw: RawValue) -> usize {
        let missing = match raw {
            None => true,
            Some(v) => v.is_nan() || self.missing_codes.contains(&v),
        };
        self.rows
            .iter()
            .position(|r| match (r.range, raw) {
                (TableRange::Missing, _) => missing,
                (TableRange::Interval(i), Some(x)) => !missing && i.contains(x),
                _ => false,
            })
            .expect("intervals cover the real line")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("subscale,feature,range,points\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},\"{}\",{}",
                self.subscale,
                self.feature,
                r.range.label(),
                r.points
            );
        }
        out
    }

    /// Plain-text layout: one line per range with its points.
    pub fn render_text(&self) -> String {
        let mut out = format!("{}\n", self.feature);
        for r in &self.rows {
            let _ = writeln!(out, "  {:<24} {:>9.3}", r.range.label(), r.points);
        }
        out
    }
}

/// Scoring table of raw feature `feature` within subscale `k`.
pub fn to_scoring_table(model: &ArmModel, k: usize, feature: usize) -> Result<ScoringTable, ModelError> {
    let offset = model.coefficient_offset(k, feature)?;
    let spec = &model.specs()[feature];
    let subscale = model.subscale(k);
    let kinds = spec.binary_kinds();
    let coefs = &subscale.coefficients[offset..offset + kinds.len()];
    let t = &spec.thresholds;
    let m = t.len();

    let increasing = kinds.iter().any(|k| matches!(k, BinaryKind::Above(_)));
    let mut rows = Vec::with_capacity(m + 2);
    for i in 0..=m {
        let interval = Interval {
            lower: (i > 0).then(|| t[i - 1]),
            lower_inclusive: !increasing,
            upper: (i < m).then(|| t[i]),
            upper_inclusive: increasing,
        };
        let mut points = 0.0;
        for (l, kind) in kinds.iter().enumerate() {
            let active = match kind {
                // x in [t_{i-1}, t_i): x < t_j iff i <= j
                BinaryKind::Below(_) => i <= l,
                // x in (t_{i-1}, t_i]: x > t_j iff j < i
                BinaryKind::Above(_) => l < i,
                BinaryKind::NotMissing => true,
                BinaryKind::Complement(_) => unreachable!("originals only"),
            };
            if active {
                points += coefs[l];
            }
        }
        rows.push(ScoringRow {
            range: TableRange::Interval(interval),
            points,
        });
    }
    rows.push(ScoringRow {
        range: TableRange::Missing,
        points: 0.0,
    });

    Ok(ScoringTable {
        feature: spec.name.clone(),
        subscale: subscale.name.clone(),
        rows,
        missing_codes: spec.missing_codes.clone(),
    })
}

/// All scoring tables of subscale `k`, plus its bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscaleTable {
    pub name: String,
    pub bias: f64,
    pub tables: Vec<ScoringTable>,
}

impl SubscaleTable {
    pub fn for_subscale(model: &ArmModel, k: usize) -> Self {
        let s = model.subscale(k);
        Self {
            name: s.name.clone(),
            bias: s.bias,
            tables: s
                .features
                .iter()
                .map(|&p| to_scoring_table(model, k, p).expect("feature belongs to subscale"))
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("subscale,feature,range,points\n");
        let _ = writeln!(out, "{},(bias),\"always\",{}", self.name, self.bias);
        for t in &self.tables {
            for line in t.to_csv().lines().skip(1) {
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("== {} ==\n  {:<24} {:>9.3}\n", self.name, "(base points)", self.bias);
        for t in &self.tables {
            out.push_str(&t.render_text());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binarize::{FeatureSpec, Monotonicity};
    use crate::model::Subscale;

    fn model(mono: Monotonicity, coefficients: Vec<f64>) -> ArmModel {
        let spec = FeatureSpec::new("x", mono, vec![10.0, 50.0, 75.0]).with_missing_codes(vec![-9.0]);
        ArmModel::new(
            vec![spec],
            vec![Subscale {
                name: "S".into(),
                features: vec![0],
                coefficients,
                bias: 0.0,
            }],
            vec![1.0],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn decreasing_partial_sums() {
        let m = model(Monotonicity::Decreasing, vec![0.5, 0.3, 0.2, 0.1]);
        let t = to_scoring_table(&m, 0, 0).unwrap();
        let pts: Vec<f64> = t.rows.iter().map(|r| r.points).collect();
        let expected = [1.1, 0.6, 0.3, 0.1, 0.0];
        for (a, b) in pts.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{pts:?}");
        }
        assert_eq!(t.lookup(Some(5.0)), pts[0]);
        assert_eq!(t.lookup(Some(10.0)), pts[1]);
        assert_eq!(t.lookup(Some(74.9)), pts[2]);
        assert_eq!(t.lookup(Some(75.0)), pts[3]);
        assert_eq!(t.lookup(Some(-9.0)), 0.0);
        assert_eq!(t.lookup(None), 0.0);
    }

    #[test]
    fn increasing_boundaries() {
        let m = model(Monotonicity::Increasing, vec![0.5, 0.3, 0.2, 0.1]);
        let t = to_scoring_table(&m, 0, 0).unwrap();
        for v in [-100.0, 10.0, 10.5, 50.0, 60.0, 75.0, 75.5, 1e9] {
            assert_eq!(t.lookup(Some(v)), m.feature_points(0, 0, Some(v)).unwrap(), "v={v}");
        }
        let pts: Vec<f64> = t.rows.iter().map(|r| r.points).collect();
        assert!(pts[..4].windows(2).all(|w| w[0] <= w[1]), "{pts:?}");
    }

    #[test]
    fn zero_coefficients() {
        let m = model(Monotonicity::Decreasing, vec![0.0; 4]);
        let t = to_scoring_table(&m, 0, 0).unwrap();
        assert!(t.rows.iter().all(|r| r.points == 0.0));
    }

    #[test]
    fn no_thresholds() {
        let spec = FeatureSpec::new("x", Monotonicity::Decreasing, vec![]);
        let m = ArmModel::new(
            vec![spec],
            vec![Subscale { name: "S".into(), features: vec![0], coefficients: vec![0.25], bias: 0.0 }],
            vec![1.0],
            0.0,
        )
        .unwrap();
        let t = to_scoring_table(&m, 0, 0).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.lookup(Some(3.0)), 0.25);
        assert_eq!(t.lookup(None), 0.0);
    }

    #[test]
    fn csv_layout() {
        let m = model(Monotonicity::Decreasing, vec![0.5, 0.3, 0.2, 0.1]);
        let csv = to_scoring_table(&m, 0, 0).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "subscale,feature,range,points");
        assert_eq!(lines[1], "S,x,\"< 10\",1.1");
        assert_eq!(lines[2], "S,x,\"[10, 50)\",0.6");
        assert_eq!(lines[5], "S,x,\"missing\",0");
    }
}
