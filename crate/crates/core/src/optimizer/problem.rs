use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CoverageMatrix;

/// Which vertex pairs may be joined directly by a path variable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgePolicy {
    /// Only graph edges.
    StrictEdges,
    /// Every pair connected in the graph, priced at its shortest-path distance.
    #[default]
    MetricClosure,
}

/// One planning instance. Vertex 0 is the robot's current view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanProblem {
    pub n: usize,
    /// Undirected weighted edges of the view motion graph.
    pub edges: Vec<(usize, usize, f64)>,
    pub coverage: CoverageMatrix<u64>,
    /// Seconds of wall clock the exact solver may spend.
    pub time_limit: f64,
    pub edge_policy: EdgePolicy,
}

pub const DEFAULT_TIME_LIMIT: f64 = 20.0;

impl PlanProblem {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("problem needs vertex 0".into()));
        }
        if self.coverage.n_views() != self.n {
            return Err(Error::InvalidInput(format!(
                "coverage has {} rows for {} views",
                self.coverage.n_views(),
                self.n
            )));
        }
        if self.coverage.visible.iter().any(|r| r.len() != self.coverage.n_targets()) {
            return Err(Error::InvalidInput("ragged coverage matrix".into()));
        }
        for &(i, j, w) in &self.edges {
            if i >= self.n || j >= self.n || i == j {
                return Err(Error::InvalidInput(format!("bad edge ({i}, {j})")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidInput(format!("edge ({i}, {j}) has non-positive cost {w}")));
            }
        }
        if !(self.time_limit > 0.0) {
            return Err(Error::InvalidInput("time_limit must be positive".into()));
        }
        Ok(())
    }

    /// Symmetric matrix of direct edge costs, `INFINITY` where absent. Parallel
    /// edges keep the cheaper weight.
    pub fn edge_matrix(&self) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![f64::INFINITY; n * n];
        for &(i, j, w) in &self.edges {
            if w < m[i * n + j] {
                m[i * n + j] = w;
                m[j * n + i] = w;
            }
        }
        m
    }

    pub fn shortest_paths(&self) -> ShortestPaths {
        ShortestPaths::floyd_warshall(self.n, &self.edge_matrix())
    }

    /// Cost of a direct path variable between two real views under the edge
    /// policy, `INFINITY` when the pair has no variable.
    pub fn arc_matrix(&self) -> Vec<f64> {
        let mut m = match self.edge_policy {
            EdgePolicy::StrictEdges => self.edge_matrix(),
            EdgePolicy::MetricClosure => self.shortest_paths().dist,
        };
        for i in 0..self.n {
            m[i * self.n + i] = f64::INFINITY;
        }
        m
    }

    /// Sum of arc costs along `path` under the edge policy.
    pub fn path_cost(&self, path: &[usize]) -> f64 {
        let arcs = self.arc_matrix();
        path.windows(2).map(|w| arcs[w[0] * self.n + w[1]]).sum()
    }
}

/// All-pairs shortest paths with successor pointers for path expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct ShortestPaths {
    pub n: usize,
    pub dist: Vec<f64>,
    next: Vec<usize>,
}

impl ShortestPaths {
    pub fn floyd_warshall(n: usize, edges: &[f64]) -> Self {
        let mut dist = edges.to_vec();
        let mut next = vec![usize::MAX; n * n];
        for i in 0..n {
            for j in 0..n {
                if dist[i * n + j].is_finite() {
                    next[i * n + j] = j;
                }
            }
            dist[i * n + i] = 0.0;
            next[i * n + i] = i;
        }
        for k in 0..n {
            for i in 0..n {
                let dik = dist[i * n + k];
                if !dik.is_finite() {
                    continue;
                }
                for j in 0..n {
                    let cand = dik + dist[k * n + j];
                    if cand < dist[i * n + j] {
                        dist[i * n + j] = cand;
                        next[i * n + j] = next[i * n + k];
                    }
                }
            }
        }
        Self { n, dist, next }
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Vertex sequence of a shortest path from `i` to `j`, inclusive.
    pub fn path(&self, i: usize, j: usize) -> Option<Vec<usize>> {
        if self.next[i * self.n + j] == usize::MAX {
            return None;
        }
        let mut out = vec![i];
        let mut u = i;
        while u != j {
            u = self.next[u * self.n + j];
            out.push(u);
            if out.len() > self.n {
                return None;
            }
        }
        Some(out)
    }
}

/// Removes targets no view can observe. Returns the reduced matrix and the
/// labels of the dropped targets.
pub fn prefilter_targets<T: Clone>(coverage: &CoverageMatrix<T>) -> (CoverageMatrix<T>, Vec<T>) {
    let keep: Vec<usize> = (0..coverage.n_targets()).filter(|&c| coverage.visible.iter().any(|row| row[c])).collect();
    let kept: BTreeSet<usize> = keep.iter().copied().collect();
    let dropped =
        (0..coverage.n_targets()).filter(|c| !kept.contains(c)).map(|c| coverage.targets[c].clone()).collect();
    let reduced = CoverageMatrix {
        targets: keep.iter().map(|&c| coverage.targets[c].clone()).collect(),
        visible: coverage.visible.iter().map(|row| keep.iter().map(|&c| row[c]).collect()).collect(),
    };
    (reduced, dropped)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    /// Search completed; the plan is optimal.
    Optimal,
    /// Time or node budget ran out; the plan is the best feasible one found.
    FeasibleTimeout,
    /// Budget ran out before any feasible plan was found.
    NoSolutionTimeout,
    /// No plan satisfies the constraints.
    Infeasible,
    /// Nothing to cover beyond what the current view already sees.
    TrivialStay,
    /// Feasible plan from a heuristic, optimality not claimed.
    Heuristic,
}

impl PlanStatus {
    pub fn is_feasible(self) -> bool {
        matches!(
            self,
            PlanStatus::Optimal | PlanStatus::FeasibleTimeout | PlanStatus::TrivialStay | PlanStatus::Heuristic
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub candidates: u64,
    pub lazy_cuts: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanSolution {
    pub status: PlanStatus,
    /// Real views with `v_i = 1`, ascending; includes vertex 0.
    pub selected_views: Vec<usize>,
    /// Arcs with `p_ij = 1`; index `n` is the virtual end vertex.
    pub path_vars: Vec<(usize, usize)>,
    /// Visit order of the selected views, starting at 0.
    pub ordered_path: Vec<usize>,
    pub objective: f64,
    #[serde(default)]
    pub stats: SolveStats,
}

impl PlanSolution {
    pub fn infeasible(status: PlanStatus) -> Self {
        Self {
            status,
            selected_views: vec![],
            path_vars: vec![],
            ordered_path: vec![],
            objective: f64::INFINITY,
            stats: SolveStats::default(),
        }
    }

    /// Stay at the current view: only the arcs to and from the virtual end.
    pub fn stay(n: usize) -> Self {
        Self::from_path(PlanStatus::TrivialStay, n, vec![0], 0.0)
    }

    /// Builds the full variable assignment for a path starting at 0 among
    /// `n` real views.
    pub fn from_path(status: PlanStatus, n: usize, path: Vec<usize>, objective: f64) -> Self {
        let mut path_vars: Vec<(usize, usize)> = path.windows(2).map(|w| (w[0], w[1])).collect();
        path_vars.push((*path.last().expect("path starts at 0"), n));
        path_vars.push((n, 0));
        let mut selected_views = path.clone();
        selected_views.sort_unstable();
        Self { status, selected_views, path_vars, ordered_path: path, objective, stats: SolveStats::default() }
    }

    /// Selected views other than the start.
    pub fn new_views(&self) -> Vec<usize> {
        self.selected_views.iter().copied().filter(|&v| v != 0).collect()
    }
}

/// JSON instance file for `solve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub targets: Vec<u64>,
    /// `(view, target id)` pairs with `r_ic = 1`.
    pub coverage: Vec<(usize, u64)>,
    #[serde(default)]
    pub start: usize,
    #[serde(default)]
    pub edge_policy: EdgePolicy,
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
}

fn default_time_limit() -> f64 {
    DEFAULT_TIME_LIMIT
}

impl InstanceFile {
    pub fn into_problem(self) -> Result<PlanProblem> {
        if self.start != 0 {
            return Err(Error::InvalidInput("start must be vertex 0".into()));
        }
        let mut coverage = CoverageMatrix::new(self.n, self.targets.clone());
        for (view, target) in self.coverage {
            let c = self
                .targets
                .iter()
                .position(|&t| t == target)
                .ok_or_else(|| Error::InvalidInput(format!("coverage names unknown target {target}")))?;
            if view >= self.n {
                return Err(Error::InvalidInput(format!("coverage names unknown view {view}")));
            }
            coverage.set(view, c, true);
        }
        let problem = PlanProblem {
            n: self.n,
            edges: self.edges,
            coverage,
            time_limit: self.time_limit,
            edge_policy: self.edge_policy,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn from_problem(problem: &PlanProblem) -> Self {
        let mut coverage = Vec::new();
        for i in 0..problem.n {
            for c in problem.coverage.covered_by(i) {
                coverage.push((i, problem.coverage.targets[c]));
            }
        }
        Self {
            n: problem.n,
            edges: problem.edges.clone(),
            targets: problem.coverage.targets.clone(),
            coverage,
            start: 0,
            edge_policy: problem.edge_policy,
            time_limit: problem.time_limit,
        }
    }
}
