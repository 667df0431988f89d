//! Exact and greedy set-cover solvers for rule search.
//!
//! Selecting a candidate condition `p` excludes the opposite-label rows
//! where column `p` is 0, so a consistent rule is a set cover of the
//! opposite-label rows.

mod greedy;
mod instance;
mod sparsity;
mod support;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use greedy::greedy_cover;
pub use sparsity::solve_max_sparsity;
pub use support::{solve_max_support, solve_max_support_from};

use crate::context::ExplainContext;
use crate::rule::{Optimality, Rule};

/// Limits on one branch-and-bound search. Running out returns the best
/// rule found so far with a bound, never a silently truncated answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverBudget {
    #[serde(rename = "time_limit_ms", with = "millis")]
    pub time_limit: Duration,
    pub node_limit: u64,
    /// Relative optimality gap at which the search stops early.
    pub gap: f64,
}

impl Default for SolverBudget {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(2),
            node_limit: 20_000_000,
            gap: 0.0,
        }
    }
}

impl SolverBudget {
    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = limit;
        self
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

/// Node and wall-clock accounting for one search.
pub(crate) struct Clock {
    start: Instant,
    limit: Duration,
    node_limit: u64,
    nodes: u64,
    aborted: bool,
}

impl Clock {
    pub fn new(budget: &SolverBudget) -> Self {
        Self {
            start: Instant::now(),
            limit: budget.time_limit,
            node_limit: budget.node_limit,
            nodes: 0,
            aborted: false,
        }
    }

    /// Counts a node; true once the budget is spent.
    #[inline]
    pub fn tick(&mut self) -> bool {
        if self.aborted {
            return true;
        }
        self.nodes += 1;
        if self.nodes > self.node_limit || (self.nodes % 64 == 0 && self.start.elapsed() > self.limit) {
            self.aborted = true;
        }
        self.aborted
    }

    pub fn aborted(&self) -> bool {
        self.aborted
    }

    pub fn nodes(&self) -> u64 {
        self.nodes
    }
}

/// Rule over candidate positions `positions` of `ctx`.
pub(crate) fn make_rule(ctx: &ExplainContext<'_>, positions: &[usize], optimality: Optimality) -> Rule {
    let mut features: Vec<usize> = positions.iter().map(|&s| ctx.candidates()[s]).collect();
    features.sort_unstable();
    features.dedup();
    let support = ctx.support_rows(&features).count_ones();
    Rule {
        sparsity: features.len(),
        features,
        label: ctx.label(),
        support,
        optimality,
    }
}
