use std::time::Duration;

use arm_explain::fixtures::random_instance;
use arm_explain::{
    build_context, greedy_cover, solve_max_sparsity, solve_max_support, solve_max_support_from, verify_rule,
    ExplainError, Optimality, SolverBudget,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exhaustive answers over every subset of the candidate conditions.
struct Oracle {
    n: usize,
    /// Rows satisfying subset `S` (bitmask over candidates).
    support: Vec<u32>,
    /// Opposite-label rows satisfying `S`.
    opposite: Vec<u32>,
}

impl Oracle {
    fn new(masks: &[(u32, bool)], n: usize) -> Self {
        let size = 1usize << n;
        let mut support = vec![0u32; size];
        let mut opposite = vec![0u32; size];
        for &(m, opp) in masks {
            support[m as usize] += 1;
            if opp {
                opposite[m as usize] += 1;
            }
        }
        // Superset sums: count rows whose mask contains S.
        for bit in 0..n {
            for s in 0..size {
                if s & (1 << bit) == 0 {
                    support[s] += support[s | (1 << bit)];
                    opposite[s] += opposite[s | (1 << bit)];
                }
            }
        }
        Self { n, support, opposite }
    }

    fn feasible(&self) -> bool {
        self.opposite[(1usize << self.n) - 1] == 0
    }

    fn min_sparsity(&self) -> Option<u32> {
        (0..self.support.len())
            .filter(|&s| self.opposite[s] == 0)
            .map(|s| s.count_ones())
            .min()
    }

    fn max_support(&self, cap: u32) -> Option<u32> {
        (0..self.support.len())
            .filter(|&s| self.opposite[s] == 0 && s.count_ones() <= cap)
            .map(|s| self.support[s])
            .max()
    }
}

struct Case {
    inst: arm_explain::fixtures::RandomInstance,
    label: u8,
}

fn case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.gen_range(2..=15);
    let n = rng.gen_range(5..=200);
    let inst = random_instance(&mut rng, d, n);
    let label = inst.labels[inst.row];
    Case { inst, label }
}

fn oracle_for(c: &Case) -> (Oracle, Vec<usize>) {
    let x = c.inst.matrix.row(c.inst.row);
    let candidates: Vec<usize> = x.iter_ones().collect();
    let masks: Vec<(u32, bool)> = (0..c.inst.matrix.n_rows())
        .map(|i| {
            let mut m = 0u32;
            for (s, &p) in candidates.iter().enumerate() {
                if c.inst.matrix.get(i, p) {
                    m |= 1 << s;
                }
            }
            (m, c.inst.labels[i] != c.label)
        })
        .collect();
    (Oracle::new(&masks, candidates.len()), candidates)
}

fn exact_budget() -> SolverBudget {
    SolverBudget {
        time_limit: Duration::from_secs(60),
        node_limit: u64::MAX,
        gap: 0.0,
    }
}

#[test]
fn exact_solvers_match_exhaustive_enumeration() {
    let budget = exact_budget();
    let mut feasible = 0;
    for seed in 0..500u64 {
        let c = case(seed);
        let (oracle, _) = oracle_for(&c);
        let ctx = build_context(c.inst.matrix.row(c.inst.row), &c.inst.matrix, &c.inst.labels, c.label);
        if !oracle.feasible() {
            assert!(matches!(ctx, Err(ExplainError::InfeasibleExplanation { .. })), "seed {seed}");
            continue;
        }
        feasible += 1;
        let ctx = ctx.unwrap();
        let sparse = solve_max_sparsity(&ctx, &budget).unwrap();
        let best = oracle.min_sparsity().unwrap();
        assert_eq!(sparse.sparsity as u32, best, "seed {seed}");
        assert_eq!(sparse.optimality, Optimality::Proven);
        for relax in 0..=2 {
            let cap = best + relax;
            let rule = solve_max_support(&ctx, cap as usize, &budget).unwrap();
            assert_eq!(rule.support as u32, oracle.max_support(cap).unwrap(), "seed {seed} +{relax}");
            assert!(rule.sparsity as u32 <= cap);
            let v = verify_rule(&rule, &c.inst.matrix, &c.inst.labels);
            assert!(v.consistent && v.support == rule.support);
            assert!(rule.is_relevant(c.inst.matrix.row(c.inst.row)));
        }
        if best > 0 {
            assert!(matches!(
                solve_max_support(&ctx, best as usize - 1, &budget),
                Err(ExplainError::InfeasibleSparsityCap { .. })
            ));
        }
    }
    assert!(feasible > 300, "only {feasible} feasible instances");
}

#[test]
fn greedy_is_feasible_and_never_beats_the_optimum() {
    for seed in 1000..1300u64 {
        let c = case(seed);
        let Ok(ctx) = build_context(c.inst.matrix.row(c.inst.row), &c.inst.matrix, &c.inst.labels, c.label) else {
            continue;
        };
        let greedy = greedy_cover(&ctx);
        let exact = solve_max_sparsity(&ctx, &exact_budget()).unwrap();
        assert!(verify_rule(&greedy, &c.inst.matrix, &c.inst.labels).consistent);
        assert!(greedy.sparsity >= exact.sparsity);
        let n = c.inst.matrix.n_rows() as f64;
        if exact.sparsity > 0 {
            assert!(greedy.sparsity as f64 / exact.sparsity as f64 <= n.ln() + 1.0, "seed {seed}");
        }
    }
}

#[test]
fn support_grows_with_the_sparsity_cap() {
    let budget = exact_budget();
    for seed in 2000..2200u64 {
        let c = case(seed);
        let Ok(ctx) = build_context(c.inst.matrix.row(c.inst.row), &c.inst.matrix, &c.inst.labels, c.label) else {
            continue;
        };
        let s = solve_max_sparsity(&ctx, &budget).unwrap();
        let mut previous = solve_max_support_from(&ctx, s.sparsity, &budget, Some(&s)).unwrap();
        assert!(previous.support >= s.support);
        for relax in 1..=2 {
            let next = solve_max_support_from(&ctx, s.sparsity + relax, &budget, Some(&previous)).unwrap();
            assert!(next.support >= previous.support);
            previous = next;
        }
    }
}

fn from_originals(rows: &[&[u8]]) -> arm_core::BinarizedMatrix {
    let owned: Vec<Vec<u8>> = rows.iter().map(|r| r.to_vec()).collect();
    arm_core::BinarizedMatrix::from_originals(owned[0].len(), &owned)
}

#[test]
fn two_condition_example() {
    let m = from_originals(&[&[1, 1, 1], &[0, 1, 1], &[1, 0, 1]]);
    let ctx = build_context(m.row(0), &m, &[1, 0, 0], 1).unwrap();
    let rule = solve_max_sparsity(&ctx, &exact_budget()).unwrap();
    assert_eq!(rule.features, vec![0, 1]);
    assert_eq!(rule.sparsity, 2);
}

#[test]
fn nothing_to_exclude_gives_the_empty_rule() {
    let m = from_originals(&[&[1, 0], &[0, 1], &[1, 1]]);
    let ctx = build_context(m.row(0), &m, &[0, 0, 0], 0).unwrap();
    let rule = solve_max_sparsity(&ctx, &exact_budget()).unwrap();
    assert!(rule.features.is_empty());
    assert_eq!(rule.support, 3);
    let rule = solve_max_support(&ctx, ctx.candidates().len(), &exact_budget()).unwrap();
    assert_eq!(rule.support, 3);
    assert!(greedy_cover(&ctx).features.is_empty());
}

#[test]
fn greedy_can_be_suboptimal() {
    // Universe {1..6} of opposite rows. Set A covers {1,2,3,4}, B covers
    // {1,2,5}, C covers {3,4,6}: greedy takes A then needs B and C, while
    // {B, C} suffices.
    let covers: [&[usize]; 3] = [&[1, 2, 3, 4], &[1, 2, 5], &[3, 4, 6]];
    let rows: Vec<Vec<u8>> = (0..7)
        .map(|i| covers.iter().map(|c| u8::from(!c.contains(&i))).collect())
        .collect();
    let refs: Vec<&[u8]> = rows.iter().map(Vec::as_slice).collect();
    let m = from_originals(&refs);
    let labels = [1, 0, 0, 0, 0, 0, 0];
    let ctx = build_context(m.row(0), &m, &labels, 1).unwrap();
    assert_eq!(greedy_cover(&ctx).sparsity, 3);
    assert_eq!(solve_max_sparsity(&ctx, &exact_budget()).unwrap().sparsity, 2);
}

#[test]
fn disjoint_covers_make_greedy_optimal() {
    let covers: [&[usize]; 3] = [&[1, 2], &[3, 4, 5], &[6]];
    let rows: Vec<Vec<u8>> = (0..7)
        .map(|i| covers.iter().map(|c| u8::from(!c.contains(&i))).collect())
        .collect();
    let refs: Vec<&[u8]> = rows.iter().map(Vec::as_slice).collect();
    let m = from_originals(&refs);
    let ctx = build_context(m.row(0), &m, &[1, 0, 0, 0, 0, 0, 0], 1).unwrap();
    assert_eq!(greedy_cover(&ctx).features, solve_max_sparsity(&ctx, &exact_budget()).unwrap().features);
}

#[test]
fn support_breaks_ties_between_sparsest_rules() {
    // Two single-condition rules exclude the one opposite row; column 1
    // holds on 9 rows and column 0 on 5.
    let mut rows: Vec<Vec<u8>> = vec![vec![1, 1], vec![0, 0]];
    rows.extend((0..4).map(|_| vec![1, 1]));
    rows.extend((0..4).map(|_| vec![0, 1]));
    let refs: Vec<&[u8]> = rows.iter().map(Vec::as_slice).collect();
    let m = from_originals(&refs);
    let mut labels = vec![1u8; rows.len()];
    labels[1] = 0;
    let ctx = build_context(m.row(0), &m, &labels, 1).unwrap();
    let rule = solve_max_support(&ctx, 1, &exact_budget()).unwrap();
    assert_eq!(rule.features, vec![1]);
    assert_eq!(rule.support, 9);
}

#[test]
fn dropping_a_condition_breaks_consistency() {
    for seed in 3000..3100u64 {
        let c = case(seed);
        let Ok(ctx) = build_context(c.inst.matrix.row(c.inst.row), &c.inst.matrix, &c.inst.labels, c.label) else {
            continue;
        };
        let rule = solve_max_sparsity(&ctx, &exact_budget()).unwrap();
        if rule.features.is_empty() {
            continue;
        }
        let mut corrupted = rule.clone();
        corrupted.features.remove(0);
        let v = verify_rule(&corrupted, &c.inst.matrix, &c.inst.labels);
        assert!(!v.consistent && !v.counterexamples.is_empty(), "seed {seed}");
    }
}

#[test]
fn exhausted_budget_still_returns_a_valid_rule() {
    let tiny = SolverBudget {
        time_limit: Duration::from_secs(10),
        node_limit: 1,
        gap: 0.0,
    };
    for seed in 4000..4100u64 {
        let c = case(seed);
        let Ok(ctx) = build_context(c.inst.matrix.row(c.inst.row), &c.inst.matrix, &c.inst.labels, c.label) else {
            continue;
        };
        let rule = solve_max_sparsity(&ctx, &tiny).unwrap();
        assert!(verify_rule(&rule, &c.inst.matrix, &c.inst.labels).consistent);
        if let Optimality::Bounded { bound } = rule.optimality {
            assert!(bound <= rule.sparsity);
        }
        let warm = solve_max_support_from(&ctx, rule.sparsity, &tiny, Some(&rule)).unwrap();
        assert!(warm.support >= rule.support);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solvers_are_deterministic(seed in any::<u64>()) {
        let c = case(seed);
        if let Ok(ctx) = build_context(c.inst.matrix.row(c.inst.row), &c.inst.matrix, &c.inst.labels, c.label) {
            let a = solve_max_sparsity(&ctx, &exact_budget()).unwrap();
            let b = solve_max_sparsity(&ctx, &exact_budget()).unwrap();
            prop_assert_eq!(&a, &b);
            let a = solve_max_support(&ctx, a.sparsity + 1, &exact_budget()).unwrap();
            let b = solve_max_support(&ctx, b.sparsity + 1, &exact_budget()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
