//! Greedy plans: the solver's warm start and the motion-blind coverage
//! baseline.

use super::model::{build_model, IlpModel};
use super::problem::{PlanProblem, PlanSolution, PlanStatus};

/// Greedy set cover, ordered by nearest neighbor from vertex 0 and polished
/// with 2-opt. `None` when no feasible ordering exists under the edge policy.
pub fn greedy_warm_start(problem: &PlanProblem) -> Option<PlanSolution> {
    warm_start_from_model(&build_model(problem))
}

pub(crate) fn warm_start_from_model(model: &IlpModel) -> Option<PlanSolution> {
    let selected = greedy_cover(model, true)?;
    let mut path = nearest_neighbor_order(model, &selected)?;
    two_opt(model, &mut path);
    let cost = path_cost(model, &path);
    cost.is_finite().then(|| PlanSolution::from_path(PlanStatus::Heuristic, model.n, path, cost))
}

/// Baseline that picks views by coverage alone and orders them by nearest
/// neighbor, without any further motion optimization.
pub fn coverage_greedy_plan(problem: &PlanProblem) -> Option<PlanSolution> {
    let model = build_model(problem);
    let selected = greedy_cover(&model, false)?;
    let path = nearest_neighbor_order(&model, &selected)?;
    let cost = path_cost(&model, &path);
    cost.is_finite().then(|| PlanSolution::from_path(PlanStatus::Heuristic, model.n, path, cost))
}

fn arc(model: &IlpModel, i: usize, j: usize) -> f64 {
    model.arc_costs[i * model.n + j]
}

pub(crate) fn path_cost(model: &IlpModel, path: &[usize]) -> f64 {
    path.windows(2).map(|w| arc(model, w[0], w[1])).sum()
}

/// Views chosen to cover every target, starting from `{0}`. Ties on gain go
/// to the cheapest attachment to an already chosen view when
/// `motion_ties`, then to the lower index.
fn greedy_cover(model: &IlpModel, motion_ties: bool) -> Option<Vec<usize>> {
    let n = model.n;
    let mut covers_view: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, views) in model.cover.iter().enumerate() {
        for &i in views {
            covers_view[i].push(c);
        }
    }
    let mut uncovered = vec![true; model.cover.len()];
    let mut remaining = model.cover.len();
    let mut chosen = vec![false; n];
    chosen[0] = true;
    let mut selected = vec![0];
    for &c in &covers_view[0] {
        if uncovered[c] {
            uncovered[c] = false;
            remaining -= 1;
        }
    }
    while remaining > 0 {
        let mut best: Option<(usize, f64, usize)> = None;
        for j in 1..n {
            if chosen[j] {
                continue;
            }
            let gain = covers_view[j].iter().filter(|&&c| uncovered[c]).count();
            if gain == 0 {
                continue;
            }
            let attach = if motion_ties {
                selected.iter().map(|&s| arc(model, s, j)).fold(f64::INFINITY, f64::min)
            } else {
                0.0
            };
            let better = match best {
                None => true,
                Some((g, a, _)) => gain > g || (gain == g && attach < a),
            };
            if better {
                best = Some((gain, attach, j));
            }
        }
        let (_, _, j) = best?;
        chosen[j] = true;
        selected.push(j);
        for &c in &covers_view[j] {
            if uncovered[c] {
                uncovered[c] = false;
                remaining -= 1;
            }
        }
    }
    Some(selected)
}

/// Orders `selected` (which contains 0) greedily from vertex 0.
fn nearest_neighbor_order(model: &IlpModel, selected: &[usize]) -> Option<Vec<usize>> {
    let mut rest: Vec<usize> = selected.iter().copied().filter(|&v| v != 0).collect();
    rest.sort_unstable();
    let mut path = vec![0];
    while !rest.is_empty() {
        let head = *path.last().unwrap();
        let (k, d) = rest
            .iter()
            .enumerate()
            .map(|(k, &j)| (k, arc(model, head, j)))
            .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if !d.is_finite() {
            return None;
        }
        path.push(rest.remove(k));
    }
    Some(path)
}

/// Segment-reversal improvement of an open path with a fixed first vertex.
pub(crate) fn two_opt(model: &IlpModel, path: &mut [usize]) {
    let m = path.len();
    if m < 3 {
        return;
    }
    loop {
        let mut improved = false;
        for i in 1..m - 1 {
            for j in i + 1..m {
                let before =
                    arc(model, path[i - 1], path[i]) + if j + 1 < m { arc(model, path[j], path[j + 1]) } else { 0.0 };
                let after =
                    arc(model, path[i - 1], path[j]) + if j + 1 < m { arc(model, path[i], path[j + 1]) } else { 0.0 };
                if after < before - 1e-12 {
                    path[i..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}
