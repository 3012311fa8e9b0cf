use crate::error::{Error, Result};

use super::problem::{EdgePolicy, PlanProblem, PlanSolution, PlanStatus};

/// Vertex sequence to execute for a solution: the arcs are followed from
/// vertex 0 to the virtual end, and under the metric closure every hop is
/// expanded into its shortest path through the graph.
pub fn extract_path(solution: &PlanSolution, problem: &PlanProblem) -> Result<Vec<usize>> {
    match solution.status {
        PlanStatus::TrivialStay => return Ok(vec![0]),
        PlanStatus::Optimal | PlanStatus::FeasibleTimeout | PlanStatus::Heuristic => {}
        s => return Err(Error::InvalidInput(format!("no path in a {s:?} solution"))),
    }
    let n = problem.n;
    let mut succ = vec![usize::MAX; n + 1];
    for &(i, j) in &solution.path_vars {
        if i > n || j > n || succ[i] != usize::MAX {
            return Err(Error::Consistency(format!("arc ({i}, {j}) breaks the chain")));
        }
        succ[i] = j;
    }
    let mut order = vec![0];
    let mut u = 0;
    loop {
        let v = succ[u];
        if v == usize::MAX {
            return Err(Error::Consistency(format!("chain ends at {u} before the virtual vertex")));
        }
        if v == n {
            break;
        }
        if order.contains(&v) {
            return Err(Error::Consistency(format!("chain revisits {v}")));
        }
        order.push(v);
        u = v;
    }
    if problem.edge_policy == EdgePolicy::StrictEdges {
        return Ok(order);
    }
    let sp = problem.shortest_paths();
    let mut out = vec![0];
    for w in order.windows(2) {
        let hop = sp
            .path(w[0], w[1])
            .ok_or_else(|| Error::Consistency(format!("no graph path for hop {} -> {}", w[0], w[1])))?;
        out.extend_from_slice(&hop[1..]);
    }
    Ok(out)
}
