use arm_core::Bits;

use crate::context::ExplainContext;
use crate::rule::{Optimality, Rule};
use crate::solver::make_rule;

/// Repeatedly adds the candidate excluding the most remaining opposite
/// rows; ties go to the candidate that is 0 on more rows overall, then to
/// the lower column index.
pub fn greedy_cover(ctx: &ExplainContext<'_>) -> Rule {
    make_rule(ctx, &greedy_positions(ctx), Optimality::Heuristic)
}

pub(crate) fn greedy_positions(ctx: &ExplainContext<'_>) -> Vec<usize> {
    let n = ctx.n_rows();
    let mut uncovered = Bits::from_indices(n, ctx.opposite().iter().copied());
    let mut chosen = Vec::new();
    let mut used = vec![false; ctx.candidates().len()];
    while uncovered.any() {
        let mut best: Option<(usize, usize, usize)> = None;
        for (s, &p) in ctx.candidates().iter().enumerate() {
            if used[s] {
                continue;
            }
            let column = ctx.matrix().column(p);
            let gain = uncovered.and_not_count(column);
            if gain == 0 {
                continue;
            }
            let zeros = n - column.count_ones();
            let better = match best {
                None => true,
                Some((_, g, z)) => gain > g || (gain == g && zeros > z),
            };
            if better {
                best = Some((s, gain, zeros));
            }
        }
        let (s, _, _) = best.expect("a feasible context can always be covered");
        used[s] = true;
        chosen.push(s);
        uncovered.and_assign(ctx.matrix().column(ctx.candidates()[s]));
    }
    chosen
}
