use arm_core::Bits;

use crate::context::ExplainContext;
use crate::error::ExplainError;
use crate::rule::{Optimality, Rule};
use crate::solver::greedy::greedy_positions;
use crate::solver::instance::{Goal, Instance};
use crate::solver::{make_rule, Clock, SolverBudget};

struct Search<'a> {
    inst: &'a Instance,
    clock: Clock,
    best: Vec<usize>,
    /// Stop once the incumbent reaches this size.
    target: usize,
    chosen: Vec<usize>,
}

impl Search<'_> {
    fn done(&self) -> bool {
        self.best.len() <= self.target
    }

    fn dfs(&mut self, uncovered: &Bits, excluded: &Bits) {
        if self.clock.tick() || self.done() {
            return;
        }
        if uncovered.none() {
            if self.chosen.len() < self.best.len() {
                self.best = self.chosen.clone();
            }
            return;
        }
        if self.chosen.len() + self.inst.lower_bound(uncovered, excluded) >= self.best.len() {
            return;
        }
        let (e, n) = self.inst.branch_element(uncovered, excluded);
        if n == 0 {
            return;
        }
        let mut branches: Vec<(usize, usize)> = self.inst.covered_by[e]
            .iter_ones()
            .filter(|&s| !excluded.get(s))
            .map(|s| (s, self.inst.covers[s].and_count(uncovered)))
            .collect();
        branches.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut excluded = excluded.clone();
        for (s, _) in branches {
            self.chosen.push(s);
            self.dfs(&uncovered.and_not(&self.inst.covers[s]), &excluded);
            self.chosen.pop();
            if self.clock.aborted() || self.done() {
                return;
            }
            excluded.set(s, true);
        }
    }
}

/// Fewest conditions that exclude every opposite-label row.
///
/// Branch and bound from a greedy incumbent over the dominance-reduced
/// instance; the result is proven optimal unless the budget runs out.
pub fn solve_max_sparsity(ctx: &ExplainContext<'_>, budget: &SolverBudget) -> Result<Rule, ExplainError> {
    if ctx.opposite().is_empty() {
        return Ok(make_rule(ctx, &[], Optimality::Proven));
    }
    let greedy = greedy_positions(ctx);
    let inst = Instance::new(ctx, Goal::Sparsity);
    let all = Bits::ones(inst.n_elements());
    let none = Bits::zeros(inst.n_sets());
    let root_bound = inst.lower_bound(&all, &none);
    if greedy.len() <= root_bound {
        return Ok(make_rule(ctx, &greedy, Optimality::Proven));
    }
    // Stop early when within the allowed relative gap of the root bound.
    let target = (0..greedy.len())
        .find(|&k| k >= root_bound && (k - root_bound) as f64 <= budget.gap * k as f64)
        .unwrap_or(root_bound);
    let mut search = Search {
        inst: &inst,
        clock: Clock::new(budget),
        // Greedy positions are not instance sets; only the length matters
        // until the search improves on it.
        best: greedy.clone(),
        target,
        chosen: Vec::new(),
    };
    search.dfs(&all, &none);
    let improved = search.best.len() < greedy.len();
    let positions: Vec<usize> = if improved {
        search.best.iter().map(|&s| inst.positions[s]).collect()
    } else {
        greedy
    };
    let optimality = if search.clock.aborted() || (search.done() && positions.len() > root_bound && budget.gap > 0.0) {
        Optimality::Bounded { bound: root_bound }
    } else {
        Optimality::Proven
    };
    tracing::debug!(nodes = search.clock.nodes(), sparsity = positions.len(), ?optimality, "max-sparsity solve");
    Ok(make_rule(ctx, &positions, optimality))
}
