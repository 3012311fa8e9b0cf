//! Exact branch-and-bound over the path and view variables.
//!
//! Branching follows the open path from vertex 0: at each node the arc from
//! the current path head to the cheapest undecided successor is fixed to
//! one first; backtracking fixes it to zero and moves to the next successor.
//! Closing the path through the virtual end vertex is only allowed once every
//! target is covered, and each such integral candidate is checked against
//! the full model. Any subtour found there becomes a lazy row of the model.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::heuristics::warm_start_from_model;
use super::model::{build_model, Assignment, IlpModel};
use super::problem::{EdgePolicy, PlanProblem, PlanSolution, PlanStatus, SolveStats};
use super::subtour::detect_subtours;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    /// Deterministic budget on explored nodes.
    pub node_limit: Option<u64>,
    /// Cap on the number of memoized (head, visited set) states.
    pub memo_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { time_limit: super::problem::DEFAULT_TIME_LIMIT, node_limit: None, memo_limit: 2_000_000 }
    }
}

impl SolveOptions {
    pub fn with_time_limit(time_limit: f64) -> Self {
        Self { time_limit, ..Self::default() }
    }
}

const PRUNE_EPS: f64 = 1e-10;
const CLOCK_POLL: u64 = 64;

/// Solves a problem end to end: trivial cases bypass the model, everything
/// else goes through [`solve_exact`].
pub fn solve(problem: &PlanProblem, opts: &SolveOptions) -> PlanSolution {
    if problem.validate().is_err() {
        return PlanSolution::infeasible(PlanStatus::Infeasible);
    }
    let cov = &problem.coverage;
    if (0..cov.n_targets()).all(|c| cov.get(0, c)) {
        return PlanSolution::stay(problem.n);
    }
    if (0..cov.n_targets()).any(|c| cov.covering_views(c).is_empty()) {
        return PlanSolution::infeasible(PlanStatus::Infeasible);
    }
    let mut model = build_model(problem);
    solve_exact(&mut model, opts)
}

pub fn solve_exact(model: &mut IlpModel, opts: &SolveOptions) -> PlanSolution {
    let start = Instant::now();
    let deadline = start + Duration::from_secs_f64(opts.time_limit.max(0.0));
    let warm = warm_start_from_model(model);
    let mut search = Search::new(model, deadline, opts);
    if let Some(w) = &warm {
        if model.check_solution(w).is_empty() {
            search.best = Some((w.objective, w.ordered_path.clone()));
        }
    }
    search.run(model);

    let stats = SolveStats { nodes: search.nodes, candidates: search.candidates, lazy_cuts: search.cuts };
    let status = match (&search.best, search.stopped) {
        (Some(_), false) => PlanStatus::Optimal,
        (Some(_), true) => PlanStatus::FeasibleTimeout,
        (None, false) => PlanStatus::Infeasible,
        (None, true) => PlanStatus::NoSolutionTimeout,
    };
    let mut sol = match search.best.take() {
        Some((cost, path)) => PlanSolution::from_path(status, model.n, path, cost),
        None => PlanSolution::infeasible(status),
    };
    sol.stats = stats;
    sol
}

struct Search {
    n: usize,
    words: usize,
    arcs: Vec<f64>,
    dist: Vec<f64>,
    /// Targets each view covers.
    view_targets: Vec<Vec<usize>>,
    cover: Vec<Vec<usize>>,
    metric: bool,
    // mutable state
    path: Vec<usize>,
    visited: Vec<u64>,
    cover_count: Vec<u32>,
    uncovered: usize,
    memo: HashMap<(usize, Vec<u64>), f64>,
    memo_limit: usize,
    best: Option<(f64, Vec<usize>)>,
    nodes: u64,
    candidates: u64,
    cuts: u64,
    deadline: Instant,
    node_limit: Option<u64>,
    stopped: bool,
}

impl Search {
    fn new(model: &IlpModel, deadline: Instant, opts: &SolveOptions) -> Self {
        let n = model.n;
        let mut view_targets = vec![Vec::new(); n];
        for (c, views) in model.cover.iter().enumerate() {
            for &i in views {
                view_targets[i].push(c);
            }
        }
        Self {
            n,
            words: n.div_ceil(64),
            arcs: model.arc_costs.clone(),
            dist: model.graph_dist.clone(),
            view_targets,
            cover: model.cover.clone(),
            metric: model.edge_policy == EdgePolicy::MetricClosure,
            path: Vec::new(),
            visited: vec![0; n.div_ceil(64)],
            cover_count: vec![0; model.cover.len()],
            uncovered: model.cover.len(),
            memo: HashMap::new(),
            memo_limit: opts.memo_limit,
            best: None,
            nodes: 0,
            candidates: 0,
            cuts: 0,
            deadline,
            node_limit: opts.node_limit,
            stopped: false,
        }
    }

    fn is_visited(&self, v: usize) -> bool {
        self.visited[v / 64] >> (v % 64) & 1 == 1
    }

    fn push(&mut self, v: usize) {
        self.path.push(v);
        self.visited[v / 64] |= 1 << (v % 64);
        for &c in &self.view_targets[v] {
            if self.cover_count[c] == 0 {
                self.uncovered -= 1;
            }
            self.cover_count[c] += 1;
        }
    }

    fn pop(&mut self) {
        let v = self.path.pop().expect("non-empty path");
        self.visited[v / 64] &= !(1 << (v % 64));
        for &c in &self.view_targets[v] {
            self.cover_count[c] -= 1;
            if self.cover_count[c] == 0 {
                self.uncovered += 1;
            }
        }
    }

    fn best_cost(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.0)
    }

    fn run(&mut self, model: &mut IlpModel) {
        debug_assert_eq!(self.words, self.visited.len());
        self.push(0);
        self.dfs(model, 0.0);
        self.pop();
    }

    /// Admissible bound on the cost still needed to cover the remaining
    /// targets from the current head.
    fn remaining_bound(&self) -> f64 {
        if self.uncovered == 0 {
            return 0.0;
        }
        let head = *self.path.last().unwrap();
        let n = self.n;
        let mut reach: f64 = 0.0;
        let mut must = Vec::new();
        for (c, views) in self.cover.iter().enumerate() {
            if self.cover_count[c] > 0 {
                continue;
            }
            let mut nearest = f64::INFINITY;
            let mut open = 0usize;
            let mut only = usize::MAX;
            for &j in views {
                if self.is_visited(j) {
                    continue;
                }
                open += 1;
                only = j;
                nearest = nearest.min(self.dist[head * n + j]);
            }
            if open == 0 || !nearest.is_finite() {
                return f64::INFINITY;
            }
            reach = reach.max(nearest);
            if open == 1 {
                must.push(only);
            }
        }
        must.sort_unstable();
        must.dedup();
        // Every forced view still to be visited spends at least half of its
        // cheapest usable incident arc.
        let mut degree = 0.0;
        for &x in &must {
            let mut cheapest = self.arcs[x * n + head];
            for y in 0..n {
                if y != x && !self.is_visited(y) {
                    cheapest = cheapest.min(self.arcs[x * n + y]);
                }
            }
            if !cheapest.is_finite() {
                return f64::INFINITY;
            }
            degree += 0.5 * cheapest;
        }
        reach.max(degree)
    }

    fn out_of_budget(&mut self) -> bool {
        if self.stopped {
            return true;
        }
        if let Some(limit) = self.node_limit {
            if self.nodes >= limit {
                self.stopped = true;
            }
        }
        if self.nodes % CLOCK_POLL == 0 && Instant::now() >= self.deadline {
            self.stopped = true;
        }
        self.stopped
    }

    fn dfs(&mut self, model: &mut IlpModel, cost: f64) {
        self.nodes += 1;
        if self.out_of_budget() {
            return;
        }
        if self.uncovered == 0 {
            self.candidate(model, cost);
            return;
        }
        if cost + self.remaining_bound() >= self.best_cost() - PRUNE_EPS {
            return;
        }
        let head = *self.path.last().unwrap();
        if self.memo.len() < self.memo_limit || self.memo.contains_key(&(head, self.visited.clone())) {
            let key = (head, self.visited.clone());
            match self.memo.get(&key) {
                Some(&seen) if seen <= cost + PRUNE_EPS => return,
                _ => {
                    self.memo.insert(key, cost);
                }
            }
        }

        let n = self.n;
        let mut children: Vec<(f64, usize)> = (0..n)
            .filter(|&j| !self.is_visited(j))
            .map(|j| (self.arcs[head * n + j], j))
            .filter(|&(a, _)| a.is_finite())
            .filter(|&(_, j)| !self.metric || self.view_targets[j].iter().any(|&c| self.cover_count[c] == 0))
            .collect();
        children.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (a, j) in children {
            if cost + a >= self.best_cost() - PRUNE_EPS {
                // Children are sorted by arc cost; the rest cost at least as much.
                break;
            }
            self.push(j);
            self.dfs(model, cost + a);
            self.pop();
            if self.stopped {
                return;
            }
        }
    }

    fn candidate(&mut self, model: &mut IlpModel, cost: f64) {
        self.candidates += 1;
        if cost >= self.best_cost() - PRUNE_EPS {
            return;
        }
        let sol = PlanSolution::from_path(PlanStatus::Optimal, self.n, self.path.clone(), cost);
        let assignment = Assignment::from_solution(&sol, self.n);
        let subtours = detect_subtours(&assignment.path_vars());
        if !subtours.is_empty() {
            for s in subtours {
                model.add_subtour_cut(&s);
                self.cuts += 1;
            }
            return;
        }
        debug_assert!(model.violations(&assignment).is_empty(), "{:?}", model.violations(&assignment));
        self.best = Some((cost, self.path.clone()));
    }
}
