use arm_core::Bits;

use crate::context::ExplainContext;
use crate::error::ExplainError;
use crate::rule::{Optimality, Rule};
use crate::solver::instance::{Goal, Instance};
use crate::solver::{make_rule, Clock, SolverBudget};

#[derive(Clone)]
struct Incumbent {
    support: usize,
    /// Candidate positions.
    positions: Vec<usize>,
}

impl Incumbent {
    fn beaten_by(&self, support: usize, size: usize) -> bool {
        support > self.support || (support == self.support && size < self.positions.len())
    }
}

struct Search<'a> {
    inst: &'a Instance,
    cap: usize,
    clock: Clock,
    best: Option<Incumbent>,
    /// Stop once an incumbent reaches this support.
    target: usize,
    chosen: Vec<usize>,
}

impl Search<'_> {
    fn done(&self) -> bool {
        self.best.as_ref().is_some_and(|b| b.support >= self.target)
    }

    /// True when no rule extending the current one by a set with support
    /// `c` can beat the incumbent.
    fn hopeless(&self, c: usize) -> bool {
        self.best.as_ref().is_some_and(|b| !b.beaten_by(c, self.chosen.len() + 1))
    }

    fn dfs(&mut self, uncovered: &Bits, excluded: &Bits, rows: &Bits, support: usize) {
        if self.clock.tick() || self.done() {
            return;
        }
        if uncovered.none() {
            if self.best.as_ref().is_none_or(|b| b.beaten_by(support, self.chosen.len())) {
                self.best = Some(Incumbent {
                    support,
                    positions: self.chosen.iter().map(|&s| self.inst.positions[s]).collect(),
                });
            }
            return;
        }
        if self.chosen.len() >= self.cap {
            return;
        }
        let bound = self.inst.lower_bound(uncovered, excluded);
        let size = self.chosen.len() + bound;
        if size > self.cap || self.best.as_ref().is_some_and(|b| !b.beaten_by(support, size)) {
            return;
        }
        // Support each set would leave; sets that cannot help are excluded.
        let mut excluded = excluded.clone();
        let mut inter = vec![0; self.inst.n_sets()];
        for s in 0..self.inst.n_sets() {
            if !excluded.get(s) {
                inter[s] = rows.and_count(&self.inst.supports[s]);
                if self.hopeless(inter[s]) {
                    excluded.set(s, true);
                }
            }
        }
        // Every uncovered element needs one of its sets, so branch on the
        // element with the fewest promising ones.
        let mut pick: Option<(usize, usize)> = None;
        for e in uncovered.iter_ones() {
            let n = self.inst.covered_by[e].and_not_count(&excluded);
            if n == 0 {
                return;
            }
            if pick.is_none_or(|(_, best)| n < best) {
                pick = Some((e, n));
            }
        }
        let (e, _) = pick.expect("uncovered is non-empty");
        let mut branches: Vec<usize> = self.inst.covered_by[e].iter_ones().filter(|&s| !excluded.get(s)).collect();
        branches.sort_by(|&a, &b| inter[b].cmp(&inter[a]).then(a.cmp(&b)));
        for s in branches {
            if !self.hopeless(inter[s]) {
                self.chosen.push(s);
                let r = rows.and(&self.inst.supports[s]);
                self.dfs(&uncovered.and_not(&self.inst.covers[s]), &excluded, &r, inter[s]);
                self.chosen.pop();
                if self.clock.aborted() || self.done() {
                    return;
                }
            }
            excluded.set(s, true);
        }
    }
}

/// Largest-support rule with at most `max_sparsity` conditions.
pub fn solve_max_support(
    ctx: &ExplainContext<'_>,
    max_sparsity: usize,
    budget: &SolverBudget,
) -> Result<Rule, ExplainError> {
    solve_max_support_from(ctx, max_sparsity, budget, None)
}

/// As [`solve_max_support`], starting from `warm` when it is a feasible
/// rule for `ctx` within the cap. The result is never worse than `warm`.
pub fn solve_max_support_from(
    ctx: &ExplainContext<'_>,
    max_sparsity: usize,
    budget: &SolverBudget,
    warm: Option<&Rule>,
) -> Result<Rule, ExplainError> {
    let n = ctx.n_rows();
    if ctx.opposite().is_empty() {
        return Ok(make_rule(ctx, &[], Optimality::Proven));
    }
    let inst = Instance::new(ctx, Goal::Support);
    let all = Bits::ones(inst.n_elements());
    let none = Bits::zeros(inst.n_sets());

    let warm = warm.and_then(|rule| {
        let positions: Option<Vec<usize>> = rule
            .features
            .iter()
            .map(|p| ctx.candidates().binary_search(p).ok())
            .collect();
        let positions = positions?;
        let rows = ctx.support_rows(&rule.features);
        let consistent = ctx.opposite().iter().all(|&i| !rows.get(i));
        (consistent && positions.len() <= max_sparsity).then(|| Incumbent {
            support: rows.count_ones(),
            positions,
        })
    });

    // Any rule contains a set covering the root branching element.
    let (e0, _) = inst.branch_element(&all, &none);
    let root_bound = inst.covered_by[e0]
        .iter_ones()
        .map(|s| inst.supports[s].count_ones())
        .max()
        .unwrap_or(0);
    let target = ((1.0 - budget.gap) * root_bound as f64).ceil() as usize;
    let mut search = Search {
        inst: &inst,
        cap: max_sparsity,
        clock: Clock::new(budget),
        best: warm,
        target: if budget.gap > 0.0 { target } else { usize::MAX },
        chosen: Vec::new(),
    };
    search.dfs(&all, &none, &Bits::ones(n), n);
    let aborted = search.clock.aborted() || search.done();
    tracing::debug!(nodes = search.clock.nodes(), aborted, "max-support solve");
    match search.best {
        Some(best) => {
            let optimality = if aborted && best.support < root_bound {
                Optimality::Bounded { bound: root_bound }
            } else {
                Optimality::Proven
            };
            Ok(make_rule(ctx, &best.positions, optimality))
        }
        None if search.clock.aborted() => Err(ExplainError::BudgetExhaustedNoIncumbent),
        None => Err(ExplainError::InfeasibleSparsityCap { cap: max_sparsity }),
    }
}
