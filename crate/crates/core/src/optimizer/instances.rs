//! Reference and randomly generated planning instances.

use rand::Rng;

use crate::graph::CoverageMatrix;

use super::problem::{EdgePolicy, PlanProblem, DEFAULT_TIME_LIMIT};

/// Four views and six targets. The current view 0 sees `c0`; only view 1
/// sees `c1`, only view 3 sees `c5`, and together views 0, 1 and 3 see
/// everything. Going 0 -> 3 -> 1 costs 1.0 + 1.0.
pub fn worked_example() -> PlanProblem {
    let visible: [(usize, u64); 11] =
        [(0, 0), (1, 1), (1, 2), (1, 3), (2, 0), (2, 2), (2, 4), (3, 3), (3, 4), (3, 5), (3, 0)];
    let mut coverage = CoverageMatrix::new(4, (0..6).collect());
    for (i, c) in visible {
        coverage.set(i, c as usize, true);
    }
    PlanProblem {
        n: 4,
        edges: vec![(0, 1, 1.5), (0, 2, 0.8), (0, 3, 1.0), (1, 2, 1.2), (1, 3, 1.0), (2, 3, 0.7)],
        coverage,
        time_limit: DEFAULT_TIME_LIMIT,
        edge_policy: EdgePolicy::MetricClosure,
    }
}

/// Settings for [`random_instance`].
#[derive(Clone, Copy, Debug)]
pub struct RandomInstance {
    pub n: usize,
    pub targets: usize,
    pub policy: EdgePolicy,
    /// Probability of each extra edge beyond a random spanning tree.
    pub edge_prob: f64,
    /// Probability that a view other than 0 sees a target.
    pub cover_prob: f64,
}

impl RandomInstance {
    pub fn new(n: usize, targets: usize) -> Self {
        Self { n, targets, policy: EdgePolicy::MetricClosure, edge_prob: 0.3, cover_prob: 0.3 }
    }
}

/// Connected sparse graph with dyadic edge costs (multiples of 1/8) so sums
/// are exact; every target is seen by at least one view.
pub fn random_instance<R: Rng>(rng: &mut R, spec: &RandomInstance) -> PlanProblem {
    let n = spec.n.max(1);
    let cost = |rng: &mut R| f64::from(rng.gen_range(1u32..=40)) / 8.0;
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push((j, i, cost(rng)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !edges.iter().any(|&(a, b, _)| (a, b) == (i, j)) && rng.gen_bool(spec.edge_prob) {
                edges.push((i, j, cost(rng)));
            }
        }
    }
    let mut coverage = CoverageMatrix::new(n, (0..spec.targets as u64).collect());
    for c in 0..spec.targets {
        for i in 0..n {
            let p = if i == 0 { spec.cover_prob / 3.0 } else { spec.cover_prob };
            if rng.gen_bool(p) {
                coverage.set(i, c, true);
            }
        }
        if coverage.covering_views(c).is_empty() {
            let i = if n > 1 { rng.gen_range(1..n) } else { 0 };
            coverage.set(i, c, true);
        }
    }
    PlanProblem { n, edges, coverage, time_limit: DEFAULT_TIME_LIMIT, edge_policy: spec.policy }
}
