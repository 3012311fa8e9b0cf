//! Exhaustive reference solver for small instances.
//!
//! Shares no code with the branch-and-bound path: arc costs are rebuilt from
//! the raw edge list and every coverage-feasible subset is priced by an exact
//! shortest Hamiltonian path.

use crate::error::{Error, Result};

use super::problem::{EdgePolicy, PlanProblem, PlanSolution, PlanStatus};

pub const ORACLE_MAX_VIEWS: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMethod {
    /// Subset dynamic program over (visited set, last vertex).
    HeldKarp,
    /// Every ordering of every subset.
    Permutations,
}

pub fn brute_force_oracle(problem: &PlanProblem) -> Result<PlanSolution> {
    brute_force_oracle_with(problem, OracleMethod::HeldKarp)
}

pub fn brute_force_oracle_with(problem: &PlanProblem, method: OracleMethod) -> Result<PlanSolution> {
    let n = problem.n;
    if n == 0 || n > ORACLE_MAX_VIEWS {
        return Err(Error::InvalidInput(format!("oracle handles 1..={ORACLE_MAX_VIEWS} views, got {n}")));
    }
    let cov = &problem.coverage;
    let nt = cov.n_targets();
    // Targets as bitmasks over views.
    let target_masks: Vec<u32> =
        (0..nt).map(|c| (0..n).filter(|&i| cov.get(i, c)).fold(0u32, |m, i| m | 1 << i)).collect();
    if target_masks.iter().all(|&m| m & 1 == 1) {
        return Ok(PlanSolution::stay(problem.n));
    }
    let w = arc_costs(problem);
    let full = 1u32 << n;
    let feasible = |mask: u32| target_masks.iter().all(|&t| t & mask != 0);

    let mut best: Option<(f64, Vec<usize>)> = None;
    match method {
        OracleMethod::HeldKarp => {
            // dp[mask][j]: cheapest path from 0 visiting exactly `mask`, ending at j.
            let mut dp = vec![f64::INFINITY; (full as usize) * n];
            let mut parent = vec![usize::MAX; (full as usize) * n];
            dp[n] = 0.0; // mask 1, vertex 0
            for mask in 1..full {
                if mask & 1 == 0 {
                    continue;
                }
                for j in 0..n {
                    let cur = dp[mask as usize * n + j];
                    if !cur.is_finite() {
                        continue;
                    }
                    for k in 0..n {
                        if mask >> k & 1 == 1 || !w[j * n + k].is_finite() {
                            continue;
                        }
                        let next = (mask | 1 << k) as usize;
                        let cand = cur + w[j * n + k];
                        if cand < dp[next * n + k] {
                            dp[next * n + k] = cand;
                            parent[next * n + k] = j;
                        }
                    }
                }
            }
            for mask in 1..full {
                if mask & 1 == 0 || !feasible(mask) {
                    continue;
                }
                for j in 0..n {
                    let c = dp[mask as usize * n + j];
                    if c < best.as_ref().map_or(f64::INFINITY, |b| b.0) {
                        let mut path = vec![j];
                        let (mut m, mut v) = (mask, j);
                        while v != 0 {
                            let p = parent[m as usize * n + v];
                            m &= !(1 << v);
                            v = p;
                            path.push(v);
                        }
                        path.reverse();
                        best = Some((c, path));
                    }
                }
            }
        }
        OracleMethod::Permutations => {
            for mask in 1..full {
                if mask & 1 == 0 || !feasible(mask) {
                    continue;
                }
                let mut rest: Vec<usize> = (1..n).filter(|&i| mask >> i & 1 == 1).collect();
                permute(&mut rest, 0, &mut |order| {
                    let mut cost = 0.0;
                    let mut prev = 0;
                    for &v in order {
                        cost += w[prev * n + v];
                        prev = v;
                    }
                    if cost < best.as_ref().map_or(f64::INFINITY, |b| b.0) {
                        let mut path = vec![0];
                        path.extend_from_slice(order);
                        best = Some((cost, path));
                    }
                });
            }
        }
    }
    Ok(match best {
        Some((cost, path)) => PlanSolution::from_path(PlanStatus::Optimal, n, path, cost),
        None => PlanSolution::infeasible(PlanStatus::Infeasible),
    })
}

fn permute<F: FnMut(&[usize])>(items: &mut Vec<usize>, k: usize, f: &mut F) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, f);
        items.swap(k, i);
    }
}

/// Direct arc costs under the policy, closure by repeated relaxation.
fn arc_costs(problem: &PlanProblem) -> Vec<f64> {
    let n = problem.n;
    let mut w = vec![f64::INFINITY; n * n];
    for &(i, j, c) in &problem.edges {
        w[i * n + j] = w[i * n + j].min(c);
        w[j * n + i] = w[j * n + i].min(c);
    }
    if problem.edge_policy == EdgePolicy::MetricClosure {
        let direct = w.clone();
        loop {
            let mut changed = false;
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    for k in 0..n {
                        if k == i || k == j {
                            continue;
                        }
                        let cand = w[i * n + k] + direct[k * n + j];
                        if cand < w[i * n + j] {
                            w[i * n + j] = cand;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }
    for i in 0..n {
        w[i * n + i] = f64::INFINITY;
    }
    w
}
