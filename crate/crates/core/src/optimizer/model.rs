//! Explicit integer program: path variables `p_ij`, view variables `v_i`,
//! the linear constraint families and the variable fixings. Subtour
//! elimination rows start empty and are appended as violated sets are found.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use super::problem::{EdgePolicy, PlanProblem, PlanSolution};
use super::subtour::detect_subtours;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Var {
    Path(usize, usize),
    View(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Which constraint family a row belongs to, with its anchor index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Family {
    InDegree(usize),
    OutDegree(usize),
    Continuity(usize),
    Coverage(usize),
    RelationIn(usize),
    RelationOut(usize),
    RelationAny(usize),
    Subtour(Vec<usize>),
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::InDegree(i) => write!(f, "in-degree of {i}"),
            Family::OutDegree(i) => write!(f, "out-degree of {i}"),
            Family::Continuity(i) => write!(f, "continuity at {i}"),
            Family::Coverage(c) => write!(f, "coverage of target #{c}"),
            Family::RelationIn(i) => write!(f, "incoming vs v_{i}"),
            Family::RelationOut(i) => write!(f, "outgoing vs v_{i}"),
            Family::RelationAny(i) => write!(f, "connection of v_{i}"),
            Family::Subtour(s) => write!(f, "subtour {s:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearConstraint {
    pub family: Family,
    pub terms: Vec<(Var, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn satisfied(&self, a: &Assignment) -> bool {
        let lhs: f64 = self.terms.iter().map(|(v, c)| c * a.value(v)).sum();
        match self.sense {
            Sense::Le => lhs <= self.rhs + 1e-9,
            Sense::Ge => lhs >= self.rhs - 1e-9,
            Sense::Eq => (lhs - self.rhs).abs() <= 1e-9,
        }
    }
}

/// A 0/1 assignment given by the set of variables at one.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    pub ones: BTreeSet<Var>,
}

impl Assignment {
    pub fn from_solution(sol: &PlanSolution, n: usize) -> Self {
        let mut ones: BTreeSet<Var> = sol.path_vars.iter().map(|&(i, j)| Var::Path(i, j)).collect();
        ones.extend(sol.selected_views.iter().map(|&i| Var::View(i)));
        ones.insert(Var::View(n));
        Self { ones }
    }

    pub fn value(&self, v: &Var) -> f64 {
        if self.ones.contains(v) {
            1.0
        } else {
            0.0
        }
    }

    pub fn path_vars(&self) -> Vec<(usize, usize)> {
        self.ones
            .iter()
            .filter_map(|v| match *v {
                Var::Path(i, j) => Some((i, j)),
                Var::View(_) => None,
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IlpModel {
    /// Number of real views; the virtual end vertex has index `n`.
    pub n: usize,
    pub edge_policy: EdgePolicy,
    pub path_vars: Vec<(usize, usize)>,
    pub path_costs: Vec<f64>,
    pub constraints: Vec<LinearConstraint>,
    pub fixings: Vec<(Var, bool)>,
    /// Subtour rows added during search.
    pub lazy: Vec<LinearConstraint>,
    /// Covering views per target.
    pub cover: Vec<Vec<usize>>,
    /// Real-to-real arc costs, `INFINITY` where no variable exists.
    #[serde(skip)]
    pub arc_costs: Vec<f64>,
    /// Shortest-path distances over the sparse graph, used for bounding.
    #[serde(skip)]
    pub graph_dist: Vec<f64>,
    #[serde(skip)]
    index: HashMap<(usize, usize), usize>,
}

pub fn build_model(problem: &PlanProblem) -> IlpModel {
    let n = problem.n;
    let arc_costs = problem.arc_matrix();
    let graph_dist = problem.shortest_paths().dist;
    let mut path_vars = Vec::new();
    let mut path_costs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && arc_costs[i * n + j].is_finite() {
                path_vars.push((i, j));
                path_costs.push(arc_costs[i * n + j]);
            }
        }
    }
    for i in 0..n {
        path_vars.push((i, n));
        path_costs.push(0.0);
        path_vars.push((n, i));
        path_costs.push(0.0);
    }
    let index = path_vars.iter().enumerate().map(|(k, &a)| (a, k)).collect();

    let mut incoming = vec![Vec::new(); n + 1];
    let mut outgoing = vec![Vec::new(); n + 1];
    for &(i, j) in &path_vars {
        outgoing[i].push(Var::Path(i, j));
        incoming[j].push(Var::Path(i, j));
    }
    let ones = |vars: &[Var]| vars.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>();

    let mut constraints = Vec::new();
    for i in 0..=n {
        constraints.push(LinearConstraint {
            family: Family::InDegree(i),
            terms: ones(&incoming[i]),
            sense: Sense::Le,
            rhs: 1.0,
        });
        constraints.push(LinearConstraint {
            family: Family::OutDegree(i),
            terms: ones(&outgoing[i]),
            sense: Sense::Le,
            rhs: 1.0,
        });
        let mut flow = ones(&incoming[i]);
        flow.extend(outgoing[i].iter().map(|&v| (v, -1.0)));
        constraints.push(LinearConstraint { family: Family::Continuity(i), terms: flow, sense: Sense::Eq, rhs: 0.0 });
    }
    let cover: Vec<Vec<usize>> =
        (0..problem.coverage.n_targets()).map(|c| problem.coverage.covering_views(c)).collect();
    for (c, views) in cover.iter().enumerate() {
        constraints.push(LinearConstraint {
            family: Family::Coverage(c),
            terms: views.iter().map(|&i| (Var::View(i), 1.0)).collect(),
            sense: Sense::Ge,
            rhs: 1.0,
        });
    }
    for i in 0..=n {
        let mut t = ones(&incoming[i]);
        t.push((Var::View(i), -1.0));
        constraints.push(LinearConstraint { family: Family::RelationIn(i), terms: t, sense: Sense::Le, rhs: 0.0 });
        let mut t = ones(&outgoing[i]);
        t.push((Var::View(i), -1.0));
        constraints.push(LinearConstraint { family: Family::RelationOut(i), terms: t, sense: Sense::Le, rhs: 0.0 });
        let mut t = ones(&incoming[i]);
        t.extend(ones(&outgoing[i]));
        t.push((Var::View(i), -1.0));
        constraints.push(LinearConstraint { family: Family::RelationAny(i), terms: t, sense: Sense::Ge, rhs: 0.0 });
    }
    let fixings = vec![(Var::View(0), true), (Var::View(n), true), (Var::Path(0, n), false), (Var::Path(n, 0), true)];

    IlpModel {
        n,
        edge_policy: problem.edge_policy,
        path_vars,
        path_costs,
        constraints,
        fixings,
        lazy: Vec::new(),
        cover,
        arc_costs,
        graph_dist,
        index,
    }
}

impl IlpModel {
    pub fn n_view_vars(&self) -> usize {
        self.n + 1
    }

    pub fn has_path_var(&self, i: usize, j: usize) -> bool {
        self.index.contains_key(&(i, j))
    }

    pub fn path_cost(&self, i: usize, j: usize) -> Option<f64> {
        self.index.get(&(i, j)).map(|&k| self.path_costs[k])
    }

    pub fn objective(&self, a: &Assignment) -> f64 {
        a.path_vars().iter().filter_map(|&(i, j)| self.path_cost(i, j)).sum()
    }

    /// Appends `sum_{i,j in S} p_ij <= |S| - 1` for the vertex set `s`.
    pub fn add_subtour_cut(&mut self, s: &[usize]) {
        let terms = self
            .path_vars
            .iter()
            .filter(|(i, j)| s.contains(i) && s.contains(j))
            .map(|&(i, j)| (Var::Path(i, j), 1.0))
            .collect();
        self.lazy.push(LinearConstraint {
            family: Family::Subtour(s.to_vec()),
            terms,
            sense: Sense::Le,
            rhs: s.len() as f64 - 1.0,
        });
    }

    /// Every violated row, fixing or structural rule for `a`, including
    /// subtours not yet present as lazy rows.
    pub fn violations(&self, a: &Assignment) -> Vec<String> {
        let mut out = Vec::new();
        for v in &a.ones {
            match *v {
                Var::Path(i, j) if !self.has_path_var(i, j) => out.push(format!("p_{i}{j} is not a model variable")),
                Var::View(i) if i > self.n => out.push(format!("v_{i} is not a model variable")),
                _ => {}
            }
        }
        for (v, val) in &self.fixings {
            if (a.value(v) == 1.0) != *val {
                out.push(format!("fixing {v:?} = {}", u8::from(*val)));
            }
        }
        for c in self.constraints.iter().chain(&self.lazy) {
            if !c.satisfied(a) {
                out.push(c.family.to_string());
            }
        }
        for s in detect_subtours(&a.path_vars()) {
            out.push(Family::Subtour(s).to_string());
        }
        out
    }

    pub fn check_solution(&self, sol: &PlanSolution) -> Vec<String> {
        self.violations(&Assignment::from_solution(sol, self.n))
    }
}
