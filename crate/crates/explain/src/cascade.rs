//! The explanation cascade: cached rules first, then exact solves at
//! decreasing support thresholds, then the outlier verdict.

use std::time::{Duration, Instant};

use arm_core::{ArmModel, Bits};
use serde::{Deserialize, Serialize};

use crate::context::{build_context, ExplainContext};
use crate::db::ExplanationDb;
use crate::error::ExplainError;
use crate::reference::ReferenceData;
use crate::rule::{rule_is_valid, Optimality, Rule};
use crate::solver::{solve_max_sparsity, solve_max_support_from, SolverBudget};

/// Sparsity relaxations tried when maximizing support.
pub const RELAXATIONS: [usize; 3] = [0, 1, 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CascadeConfig {
    /// Rules must have support strictly above this on the first pass.
    pub support_threshold: usize,
    /// Threshold of the second pass.
    pub fallback_threshold: usize,
    /// Budget of each individual solve.
    pub budget: SolverBudget,
    /// Wall-clock cap on all solves for one observation.
    #[serde(rename = "total_time_ms", with = "millis")]
    pub total_time: Duration,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            support_threshold: 10,
            fallback_threshold: 5,
            budget: SolverBudget::default(),
            total_time: Duration::from_secs(6),
        }
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

/// One of the four optimization settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "objective", rename_all = "snake_case")]
pub enum Setting {
    MaxSparsity,
    MaxSupport { relaxation: usize },
}

/// Rules for one observation under every setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub max_sparsity: Rule,
    /// Support-optimal rules at each of [`RELAXATIONS`].
    pub max_support: Vec<Rule>,
}

impl RuleSet {
    /// Rules in cascade order.
    pub fn iter(&self) -> impl Iterator<Item = (Setting, &Rule)> {
        std::iter::once((Setting::MaxSparsity, &self.max_sparsity)).chain(
            self.max_support
                .iter()
                .zip(RELAXATIONS)
                .map(|(r, relaxation)| (Setting::MaxSupport { relaxation }, r)),
        )
    }

    /// First rule in cascade order with support above `threshold`.
    pub fn first_above(&self, threshold: usize) -> Option<(Setting, &Rule)> {
        self.iter().find(|(_, r)| r.support > threshold)
    }

    /// Sparsest rule with support above `threshold`; ties go to larger
    /// support, then cascade order.
    pub fn sparsest_above(&self, threshold: usize) -> Option<(Setting, &Rule)> {
        let mut best: Option<(Setting, &Rule)> = None;
        for (s, r) in self.iter().filter(|(_, r)| r.support > threshold) {
            let better = best.is_none_or(|(_, b)| {
                r.sparsity < b.sparsity || (r.sparsity == b.sparsity && r.support > b.support)
            });
            if better {
                best = Some((s, r));
            }
        }
        best
    }
}

/// Which cascade step produced a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CascadeStep {
    DbHit,
    MaxSparsity,
    MaxSupport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSummary {
    pub setting: Setting,
    pub sparsity: usize,
    pub support: usize,
    pub optimality: Optimality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub rule: Rule,
    pub step: CascadeStep,
    pub setting: Setting,
    /// Support threshold the rule cleared.
    pub threshold: usize,
    /// All four settings for this observation.
    pub settings: Vec<SettingSummary>,
}

/// A model with its reference data and cascade settings.
#[derive(Debug, Clone)]
pub struct Explainer {
    model: ArmModel,
    reference: ReferenceData,
    config: CascadeConfig,
    model_hash: String,
}

impl Explainer {
    pub fn new(model: ArmModel, reference: ReferenceData, config: CascadeConfig) -> Self {
        let model_hash = arm_core::document::model_hash(&model);
        Self {
            model,
            reference,
            config,
            model_hash,
        }
    }

    pub fn model(&self) -> &ArmModel {
        &self.model
    }

    pub fn reference(&self) -> &ReferenceData {
        &self.reference
    }

    pub fn config(&self) -> &CascadeConfig {
        &self.config
    }

    pub fn model_hash(&self) -> &str {
        &self.model_hash
    }

    pub fn label_of(&self, x: &Bits) -> u8 {
        self.model.label_bits(x)
    }

    pub fn context<'a>(&'a self, x: &Bits) -> Result<ExplainContext<'a>, ExplainError> {
        build_context(
            x,
            self.reference.matrix(),
            self.reference.model_labels(),
            self.label_of(x),
        )
    }

    /// Rules for `x` under all four settings. Each support search starts
    /// from the previous rule, so support never decreases with the cap.
    pub fn solve(&self, x: &Bits) -> Result<RuleSet, ExplainError> {
        let ctx = self.context(x)?;
        let deadline = Instant::now() + self.config.total_time;
        let budget = || {
            let left = deadline.saturating_duration_since(Instant::now());
            self.config.budget.with_time_limit(self.config.budget.time_limit.min(left))
        };
        let sparse = solve_max_sparsity(&ctx, &budget())?;
        let mut max_support: Vec<Rule> = Vec::with_capacity(RELAXATIONS.len());
        for relax in RELAXATIONS {
            let warm = max_support.last().unwrap_or(&sparse);
            let rule = solve_max_support_from(&ctx, sparse.sparsity + relax, &budget(), Some(warm))?;
            max_support.push(rule);
        }
        Ok(RuleSet {
            max_sparsity: sparse,
            max_support,
        })
    }

    /// Cached rules for `x` that still hold against the reference data.
    pub fn cached(&self, x: &Bits, db: &ExplanationDb) -> Option<RuleSet> {
        let rules = db.get(x)?.rules.as_ref()?;
        let label = self.label_of(x);
        let valid = rules
            .iter()
            .all(|(_, r)| r.label == label && self.is_valid(r, x));
        if !valid {
            tracing::warn!(pattern = %x.to_hex(), "cached rules failed verification; solving afresh");
            return None;
        }
        Some(rules.clone())
    }

    pub fn is_valid(&self, rule: &Rule, x: &Bits) -> bool {
        rule_is_valid(rule, x, self.reference.matrix(), self.reference.model_labels())
    }

    /// Runs the cascade for binarized observation `x`.
    pub fn explain(&self, x: &Bits, db: Option<&ExplanationDb>) -> Result<Explanation, ExplainError> {
        if let Some(rules) = db.and_then(|db| self.cached(x, db)) {
            return self.select(x, &rules, true);
        }
        let rules = match self.solve(x) {
            Ok(r) => r,
            Err(ExplainError::InfeasibleExplanation { .. }) => return Err(ExplainError::Outlier),
            Err(e) => return Err(e),
        };
        self.select(x, &rules, false)
    }

    /// Picks the cascade's answer from the rules for `x`. Cached rule sets
    /// first offer their sparsest rule above the support threshold; a
    /// valid cache entry otherwise holds exactly what the solves would
    /// produce, so the remaining steps read from it.
    pub fn select(&self, x: &Bits, rules: &RuleSet, cached: bool) -> Result<Explanation, ExplainError> {
        if cached {
            if let Some((setting, rule)) = rules.sparsest_above(self.config.support_threshold) {
                return self.finish(x, rules, rule, setting, CascadeStep::DbHit, self.config.support_threshold);
            }
        }
        for threshold in [self.config.support_threshold, self.config.fallback_threshold] {
            if let Some((setting, rule)) = rules.first_above(threshold) {
                let step = match setting {
                    Setting::MaxSparsity => CascadeStep::MaxSparsity,
                    Setting::MaxSupport { .. } => CascadeStep::MaxSupport,
                };
                return self.finish(x, rules, rule, setting, step, threshold);
            }
        }
        Err(ExplainError::Outlier)
    }

    fn finish(
        &self,
        x: &Bits,
        rules: &RuleSet,
        rule: &Rule,
        setting: Setting,
        step: CascadeStep,
        threshold: usize,
    ) -> Result<Explanation, ExplainError> {
        if !self.is_valid(rule, x) {
            return Err(ExplainError::InvalidRule(format!("{:?}", rule.features)));
        }
        Ok(Explanation {
            rule: rule.clone(),
            step,
            setting,
            threshold,
            settings: rules
                .iter()
                .map(|(setting, r)| SettingSummary {
                    setting,
                    sparsity: r.sparsity,
                    support: r.support,
                    optimality: r.optimality,
                })
                .collect(),
        })
    }
}
