//! Coverage-constrained shortest view path.
//!
//! A plan starts at the current view (vertex 0), visits a subset of views
//! that together observe every target, and minimizes the summed motion cost.
//! The open path is closed into a tour through a virtual end vertex `n`
//! joined to every view at zero cost.

mod heuristics;
mod instances;
mod model;
mod oracle;
mod path;
mod problem;
mod solver;
mod subtour;

pub use heuristics::{coverage_greedy_plan, greedy_warm_start};
pub use instances::{random_instance, worked_example, RandomInstance};
pub use model::{build_model, Assignment, Family, IlpModel, LinearConstraint, Sense, Var};
pub use oracle::{brute_force_oracle, brute_force_oracle_with, OracleMethod, ORACLE_MAX_VIEWS};
pub use path::extract_path;
pub use problem::{
    prefilter_targets, EdgePolicy, InstanceFile, PlanProblem, PlanSolution, PlanStatus, ShortestPaths, SolveStats,
    DEFAULT_TIME_LIMIT,
};
pub use solver::{solve, solve_exact, SolveOptions};
pub use subtour::detect_subtours;
