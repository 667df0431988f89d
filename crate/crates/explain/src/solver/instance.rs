//! Reduced set-cover instance over the opposite-label rows.

use arm_core::Bits;

use crate::context::ExplainContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Goal {
    Sparsity,
    Support,
}

/// Sets are candidates that survive dominance; elements are distinct,
/// undominated opposite-row signatures.
#[derive(Debug, Clone)]
pub(crate) struct Instance {
    /// Candidate position of each set.
    pub positions: Vec<usize>,
    /// Elements covered by each set.
    pub covers: Vec<Bits>,
    /// Sets covering each element.
    pub covered_by: Vec<Bits>,
    /// Element indices by ascending number of covering sets.
    pub order: Vec<usize>,
    /// Rows satisfying each set's condition (support goal only).
    pub supports: Vec<Bits>,
}

/// Drops every signature that contains another: covering the smaller one
/// covers it too.
fn drop_dominated_rows(mut sigs: Vec<Bits>) -> Vec<Bits> {
    sigs.sort_by(|a, b| a.count_ones().cmp(&b.count_ones()).then_with(|| a.cmp(b)));
    sigs.dedup();
    let width = sigs.first().map_or(0, Bits::len);
    let mut frequency = vec![0usize; width];
    for sig in &sigs {
        for b in sig.iter_ones() {
            frequency[b] += 1;
        }
    }
    // Kept signatures filed under their rarest bit; a subset of `sig` is
    // filed under one of the bits of `sig`.
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); width + 1];
    let mut kept: Vec<Bits> = Vec::with_capacity(sigs.len());
    for sig in sigs {
        let dominated = buckets[width].iter().any(|&k| kept[k].is_subset(&sig))
            || sig.iter_ones().any(|b| buckets[b].iter().any(|&k| kept[k].is_subset(&sig)));
        if !dominated {
            let key = sig.iter_ones().min_by_key(|&b| (frequency[b], b)).unwrap_or(width);
            buckets[key].push(kept.len());
            kept.push(sig);
        }
    }
    kept
}

impl Instance {
    pub fn new(ctx: &ExplainContext<'_>, goal: Goal) -> Self {
        let m0 = ctx.candidates().len();
        let support_of = |s: usize| ctx.matrix().column(ctx.candidates()[s]);
        let mut alive = Bits::ones(m0);
        let mut sigs: Vec<Bits> = ctx.opposite().iter().map(|&i| ctx.covering(i)).collect();
        let mut covers: Vec<(usize, Bits)>;
        loop {
            for sig in &mut sigs {
                sig.and_assign(&alive);
            }
            sigs = drop_dominated_rows(sigs);
            let n_elements = sigs.len();
            covers = alive
                .iter_ones()
                .map(|s| (s, Bits::from_fn(n_elements, |e| sigs[e].get(s))))
                .filter(|(_, c)| c.any())
                .collect();
            let mut next = Bits::zeros(m0);
            for (a, (s, cover_s)) in covers.iter().enumerate() {
                let dominated = covers.iter().enumerate().any(|(b, (t, cover_t))| {
                    if a == b || !cover_s.is_subset(cover_t) {
                        return false;
                    }
                    let support_ok = goal == Goal::Sparsity || support_of(*s).is_subset(support_of(*t));
                    if !support_ok {
                        return false;
                    }
                    // Mutually dominating sets: keep the lower index.
                    let mutual = cover_t.is_subset(cover_s)
                        && (goal == Goal::Sparsity || support_of(*t).is_subset(support_of(*s)));
                    !(mutual && s < t)
                });
                if !dominated {
                    next.set(*s, true);
                }
            }
            // Sets without a cover appear in no signature, so dropping only
            // those leaves the instance unchanged.
            let reshaped = alive
                .and_not(&next)
                .iter_ones()
                .any(|s| covers.iter().any(|(t, _)| *t == s));
            if !reshaped {
                covers.retain(|(s, _)| next.get(*s));
                break;
            }
            alive = next;
        }

        let positions: Vec<usize> = covers.iter().map(|(s, _)| *s).collect();
        let covered_by: Vec<Bits> = sigs
            .iter()
            .map(|sig| Bits::from_fn(positions.len(), |k| sig.get(positions[k])))
            .collect();
        let mut order: Vec<usize> = (0..covered_by.len()).collect();
        order.sort_by_key(|&e| (covered_by[e].count_ones(), e));
        let supports = match goal {
            Goal::Sparsity => Vec::new(),
            Goal::Support => positions.iter().map(|&s| support_of(s).clone()).collect(),
        };
        Self {
            positions,
            covers: covers.into_iter().map(|(_, c)| c).collect(),
            covered_by,
            order,
            supports,
        }
    }

    pub fn n_sets(&self) -> usize {
        self.positions.len()
    }

    pub fn n_elements(&self) -> usize {
        self.covered_by.len()
    }

    /// Lower bound on the number of further sets needed to cover
    /// `uncovered` without using `excluded`: the larger of a packing of
    /// elements with pairwise-disjoint covering sets and a counting bound.
    pub fn lower_bound(&self, uncovered: &Bits, excluded: &Bits) -> usize {
        let remaining = uncovered.count_ones();
        if remaining == 0 {
            return 0;
        }
        let mut used = Bits::zeros(self.n_sets());
        let mut packing = 0;
        for &e in &self.order {
            if uncovered.get(e) && self.covered_by[e].is_disjoint_masked(excluded, &used) {
                for s in self.covered_by[e].iter_ones() {
                    if !excluded.get(s) {
                        used.set(s, true);
                    }
                }
                packing += 1;
            }
        }
        let widest = (0..self.n_sets())
            .filter(|&s| !excluded.get(s))
            .map(|s| self.covers[s].and_count(uncovered))
            .max()
            .unwrap_or(0);
        if widest == 0 {
            return usize::MAX / 2;
        }
        packing.max(remaining.div_ceil(widest))
    }

    /// Uncovered element with the fewest available covering sets, and that count.
    pub fn branch_element(&self, uncovered: &Bits, excluded: &Bits) -> (usize, usize) {
        let mut best = (usize::MAX, usize::MAX);
        for e in uncovered.iter_ones() {
            let n = self.covered_by[e].and_not_count(excluded);
            if n < best.1 {
                best = (e, n);
                if n <= 1 {
                    break;
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::build_context;
    use arm_core::BinarizedMatrix;

    #[test]
    fn duplicate_and_dominated_rows_collapse() {
        // Opposite rows 1 and 2 are identical; row 3 is excluded by a
        // superset of the candidates excluding row 1.
        let m = BinarizedMatrix::from_originals(
            3,
            &[vec![1, 1, 1], vec![0, 1, 1], vec![0, 1, 1], vec![0, 0, 1]],
        );
        let ctx = build_context(m.row(0), &m, &[1, 0, 0, 0], 1).unwrap();
        let inst = Instance::new(&ctx, Goal::Sparsity);
        assert_eq!(inst.n_elements(), 1);
        assert_eq!(inst.positions, vec![0]);
    }

    #[test]
    fn support_goal_keeps_sets_with_larger_support() {
        // Candidates 0 and 1 exclude the same opposite row but 1 keeps more rows.
        let m = BinarizedMatrix::from_originals(
            2,
            &[vec![1, 1], vec![0, 0], vec![0, 1], vec![1, 1]],
        );
        let ctx = build_context(m.row(0), &m, &[1, 0, 1, 1], 1).unwrap();
        let sparse = Instance::new(&ctx, Goal::Sparsity);
        assert_eq!(sparse.positions, vec![0]);
        let supported = Instance::new(&ctx, Goal::Support);
        assert_eq!(supported.positions, vec![1]);
    }
}
