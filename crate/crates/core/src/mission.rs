//! Closed-loop mapping controller on a simulated clock, plus the greedy
//! baselines it is compared against.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{evaluate, MetricsRow};
use crate::frontier::{extract_lookats, ExtractionConfig, LookAtKind, LookAtVoxel};
use crate::graph::{build_coverage, CoverageMatrix, SimilarityThresholds, Sparsity, ViewMotionGraph};
use crate::optimizer::{
    coverage_greedy_plan, greedy_warm_start, prefilter_targets, solve, EdgePolicy, PlanProblem, PlanSolution,
    PlanStatus, ShortestPaths, SolveOptions,
};
use crate::sim_world::{ground_truth, render_depth, CameraModel, Scenario};
use crate::view_sampling::{sample_views, GantryWristModel, MotionModel, SamplingParams, SensorModel, View, ViewPose};
use crate::world_model::{RaycastOptions, VoxelGrid, VoxelState};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Planner {
    #[default]
    GoVmp,
    GreedyBestfirst,
    CoverageGreedy,
}

impl Planner {
    pub const ALL: [Planner; 3] = [Planner::GoVmp, Planner::GreedyBestfirst, Planner::CoverageGreedy];

    pub fn name(self) -> &'static str {
        match self {
            Planner::GoVmp => "go_vmp",
            Planner::GreedyBestfirst => "greedy_bestfirst",
            Planner::CoverageGreedy => "coverage_greedy",
        }
    }
}

impl fmt::Display for Planner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Planner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Planner::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown planner `{s}` (go_vmp, greedy_bestfirst, coverage_greedy)")))
    }
}

/// Which look-at kinds become coverage targets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TargetSelection {
    #[serde(rename = "roi_unk")]
    RoiUnk,
    #[serde(rename = "prior_infl")]
    PriorInfl,
    #[default]
    #[serde(rename = "infl+roi_unk")]
    InflRoiUnk,
}

impl TargetSelection {
    pub const ALL: [TargetSelection; 3] =
        [TargetSelection::RoiUnk, TargetSelection::PriorInfl, TargetSelection::InflRoiUnk];

    pub fn name(self) -> &'static str {
        match self {
            TargetSelection::RoiUnk => "roi_unk",
            TargetSelection::PriorInfl => "prior_infl",
            TargetSelection::InflRoiUnk => "infl+roi_unk",
        }
    }

    pub fn accepts(self, kind: LookAtKind) -> bool {
        match self {
            TargetSelection::RoiUnk => kind == LookAtKind::RoiUnk,
            TargetSelection::PriorInfl => kind == LookAtKind::Prior,
            TargetSelection::InflRoiUnk => matches!(kind, LookAtKind::RoiUnk | LookAtKind::Prior),
        }
    }
}

impl fmt::Display for TargetSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TargetSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TargetSelection::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown target selection `{s}` (roi_unk, prior_infl, infl+roi_unk)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MissionConfig {
    /// Simulated seconds per segment after which no new plan is issued.
    pub segment_budget: f64,
    /// Simulated seconds between optimizations.
    pub replan_interval: f64,
    /// Wall-clock seconds per solver call.
    pub solver_time_limit: f64,
    /// Deterministic cap on solver nodes per call.
    pub solver_node_limit: Option<u64>,
    /// Joint-cost units per simulated second.
    pub arm_speed: f64,
    /// Simulated seconds spent capturing one view.
    pub sensing_time: f64,
    /// Simulated seconds for moving the platform between segments.
    pub trolley_time: f64,
    pub planner: Planner,
    pub target_selection: TargetSelection,
    pub sparsity: Sparsity,
    pub edge_policy: EdgePolicy,
    pub lookat_budget: usize,
    pub views_per_cycle: usize,
    /// Greatest number of views the best-first baseline chains per cycle.
    pub greedy_horizon: usize,
    pub extraction: ExtractionConfig,
    pub sensor: SensorModel,
    pub camera: CameraModel,
    pub similarity: SimilarityThresholds,
    pub sampling: SamplingParams,
    pub coverage_raycast: RaycastOptions,
    pub noise_sigma: f64,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            segment_budget: 60.0,
            replan_interval: 12.0,
            solver_time_limit: crate::optimizer::DEFAULT_TIME_LIMIT,
            solver_node_limit: Some(200_000),
            arm_speed: 0.1,
            sensing_time: 1.0,
            trolley_time: 5.0,
            planner: Planner::GoVmp,
            target_selection: TargetSelection::InflRoiUnk,
            sparsity: Sparsity::SPARSE,
            edge_policy: EdgePolicy::MetricClosure,
            lookat_budget: 60,
            views_per_cycle: 40,
            greedy_horizon: 6,
            extraction: ExtractionConfig::default(),
            sensor: SensorModel::default(),
            camera: CameraModel::default(),
            similarity: SimilarityThresholds::default(),
            sampling: SamplingParams::default(),
            coverage_raycast: RaycastOptions::default(),
            noise_sigma: 0.003,
        }
    }
}

impl MissionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.segment_budget >= 0.0) || !(self.replan_interval > 0.0) || !(self.arm_speed > 0.0) {
            return Err(Error::InvalidInput("budget must be non-negative, interval and speed positive".into()));
        }
        if !(self.sensing_time >= 0.0) || !(self.noise_sigma >= 0.0) || !(self.solver_time_limit > 0.0) {
            return Err(Error::InvalidInput("sensing time, noise and time limit must be non-negative".into()));
        }
        Ok(())
    }
}

/// One reached view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutedView {
    /// Graph vertex index within the segment's graph.
    pub vertex: usize,
    pub q: Vec<f64>,
    /// Simulated arrival time.
    pub time: f64,
    /// Joint distance from the previous executed view.
    pub hop_cost: f64,
    /// Whether a frame was captured here; transit vertices are not observed.
    pub observed: bool,
}

/// One optimization cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub time: f64,
    pub lookats: usize,
    pub targets: usize,
    /// Targets per look-at kind: OCC-UNK, FRE-UNK, ROI-UNK, PRIOR.
    pub target_kinds: [usize; 4],
    pub dropped_targets: usize,
    pub graph_vertices: usize,
    pub graph_edges: usize,
    /// Views in the planning instance, start included.
    pub problem_views: usize,
    pub status: Option<PlanStatus>,
    pub objective: Option<f64>,
    /// Graph vertices queued for observation, in order.
    pub planned: Vec<usize>,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub segment: usize,
    pub executed: Vec<ExecutedView>,
    pub motion_cost: f64,
    pub plans: Vec<PlanRecord>,
    /// Simulated seconds spent moving and sensing.
    pub map_exec_s: f64,
    /// Simulated clock when the segment finished.
    pub end_time: f64,
    pub views_executed: usize,
    pub ended_early: bool,
    pub roi_voxels: usize,
    /// Wall-clock planning seconds. Not serialized, so reports stay
    /// reproducible byte for byte.
    #[serde(skip)]
    pub planning_wall_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionReport {
    pub scenario: String,
    pub planner: Planner,
    pub seed: u64,
    pub config: MissionConfig,
    pub segments: Vec<SegmentReport>,
    pub motion_cost: f64,
    /// Simulated mission duration including platform moves.
    pub total_time: f64,
    pub segment_metrics: Vec<MetricsRow>,
    pub metrics: MetricsRow,
}

impl MissionReport {
    pub fn planning_wall_s(&self) -> f64 {
        self.segments.iter().map(|s| s.planning_wall_s).sum()
    }

    pub fn map_exec_s(&self) -> f64 {
        self.segments.iter().map(|s| s.map_exec_s).sum()
    }

    pub fn views_executed(&self) -> usize {
        self.segments.iter().map(|s| s.views_executed).sum()
    }
}

fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((a << 32) | (b & 0xffff_ffff));
    rng.next_u64()
}

/// Utility-per-cost choice among the direct neighbors of `current`:
/// newly covered targets divided by one plus the motion cost. Ties go to the
/// lower index, so when nothing new is visible the lowest-index neighbor
/// wins. `coverage` rows are graph vertices; `excluded` vertices are skipped.
pub fn greedy_bestfirst_step(
    graph: &ViewMotionGraph,
    coverage: &CoverageMatrix,
    current: usize,
    covered: &[bool],
    excluded: &[bool],
) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (j, cost) in graph.neighbors(current) {
        if excluded.get(j).copied().unwrap_or(false) {
            continue;
        }
        let gain = (0..coverage.n_targets()).filter(|&c| !covered[c] && coverage.get(j, c)).count();
        let u = gain as f64 / (1.0 + cost);
        if best.map_or(true, |(bu, bj)| u > bu || (u == bu && j < bj)) {
            best = Some((u, j));
        }
    }
    best.map(|(_, j)| j)
}

/// A queued hop: graph vertex and whether to observe on arrival.
type Hop = (usize, bool);

struct Segment<'a> {
    scenario: &'a Scenario,
    config: &'a MissionConfig,
    model: GantryWristModel,
    graph: ViewMotionGraph,
    /// Vertices observed so far in this segment.
    visited: Vec<bool>,
    noise_rng: ChaCha8Rng,
}

impl Segment<'_> {
    fn observe(&mut self, grid: &mut VoxelGrid, pose: &ViewPose) {
        let hits = render_depth(self.scenario, pose, &self.config.camera, self.config.noise_sigma, &mut self.noise_rng);
        grid.integrate_observation(&pose.position, &hits);
    }

    fn mark_visited(&mut self, v: usize) {
        if self.visited.len() < self.graph.len() {
            self.visited.resize(self.graph.len(), false);
        }
        self.visited[v] = true;
    }

    /// Expands a sequence of planned vertices into single-edge hops along
    /// shortest graph paths; only the planned vertices are observed.
    fn expand(&self, sp: &ShortestPaths, comp: &[usize], current: usize, planned: &[usize]) -> Vec<Hop> {
        let local = |g: usize| comp.binary_search(&g).expect("planned vertex in component");
        let mut hops = Vec::new();
        let mut at = current;
        for &p in planned {
            if p == at {
                continue;
            }
            let path = sp.path(local(at), local(p)).expect("component is connected");
            for (idx, &l) in path.iter().enumerate().skip(1) {
                hops.push((comp[l], idx + 1 == path.len()));
            }
            at = p;
        }
        hops
    }

    fn component_paths(&self, comp: &[usize]) -> ShortestPaths {
        let m = comp.len();
        let mut w = vec![f64::INFINITY; m * m];
        for (a, b, c) in self.graph.edges() {
            if let (Ok(i), Ok(j)) = (comp.binary_search(&a), comp.binary_search(&b)) {
                w[i * m + j] = c;
                w[j * m + i] = c;
            }
        }
        ShortestPaths::floyd_warshall(m, &w)
    }

    /// Nearest unobserved vertex of the component, by graph distance.
    fn exploration_hop(&self, sp: &ShortestPaths, comp: &[usize], current: usize) -> Vec<usize> {
        let ci = comp.binary_search(&current).expect("current in component");
        comp.iter()
            .enumerate()
            .filter(|&(_, &g)| g != current && !self.visited.get(g).copied().unwrap_or(false))
            .map(|(l, &g)| (sp.distance(ci, l), g))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, g)| vec![g])
            .unwrap_or_default()
    }

    /// Builds the planning instance over `current` and the component
    /// vertices that cover at least one target. Under metric closure the
    /// instance is complete with shortest-path costs; under strict edges it
    /// keeps the component and its graph edges.
    fn problem(
        &self,
        sp: &ShortestPaths,
        comp: &[usize],
        current: usize,
        coverage: &CoverageMatrix,
    ) -> (PlanProblem, Vec<usize>, usize) {
        let keep: Vec<usize> = match self.config.edge_policy {
            EdgePolicy::MetricClosure => {
                let mut k = vec![current];
                k.extend(
                    comp.iter()
                        .copied()
                        .filter(|&g| g != current && (0..coverage.n_targets()).any(|c| coverage.get(g, c))),
                );
                k
            }
            EdgePolicy::StrictEdges => {
                let mut k = vec![current];
                k.extend(comp.iter().copied().filter(|&g| g != current));
                k
            }
        };
        let mut edges = Vec::new();
        match self.config.edge_policy {
            EdgePolicy::MetricClosure => {
                let loc: Vec<usize> = keep.iter().map(|g| comp.binary_search(g).expect("in component")).collect();
                for a in 0..keep.len() {
                    for b in a + 1..keep.len() {
                        let d = sp.distance(loc[a], loc[b]);
                        if d.is_finite() && d > 0.0 {
                            edges.push((a, b, d));
                        }
                    }
                }
            }
            EdgePolicy::StrictEdges => {
                for (a, b, c) in self.graph.edges() {
                    if let (Some(i), Some(j)) = (keep.iter().position(|&g| g == a), keep.iter().position(|&g| g == b)) {
                        edges.push((i.min(j), i.max(j), c));
                    }
                }
            }
        }
        let rows = coverage.select_views(&keep);
        let (reduced, dropped) = prefilter_targets(&rows);
        let labelled = reduced.relabel(|i, _| i as u64);
        let problem = PlanProblem {
            n: keep.len(),
            edges,
            coverage: labelled,
            time_limit: self.config.solver_time_limit,
            edge_policy: self.config.edge_policy,
        };
        (problem, keep, dropped.len())
    }

    fn plan_cycle(
        &mut self,
        grid: &VoxelGrid,
        current: usize,
        seed: u64,
        cycle: u64,
        time: f64,
        segment: usize,
    ) -> (Vec<Hop>, PlanRecord, bool) {
        let cfg = self.config;
        let lk_seed = derive_seed(seed, 2 * segment as u64 + 1, 2 * cycle);
        let vs_seed = derive_seed(seed, 2 * segment as u64 + 1, 2 * cycle + 1);
        let lookats = extract_lookats(grid, cfg.lookat_budget, lk_seed, &cfg.extraction);
        let workspace = self.scenario.segments[segment].workspace;
        let views = sample_views(
            grid,
            &lookats,
            &workspace,
            &cfg.sensor,
            &self.model,
            cfg.views_per_cycle,
            vs_seed,
            &cfg.sampling,
        );
        let sampled = !views.is_empty();
        for v in views {
            self.graph.add_vertex(v, &self.model);
        }
        self.graph.connect_knn(grid, &self.model, cfg.sparsity);
        self.visited.resize(self.graph.len(), false);

        let targets: Vec<LookAtVoxel> =
            lookats.iter().copied().filter(|l| cfg.target_selection.accepts(l.kind)).collect();
        let comp = self.graph.component(current);
        let sp = self.component_paths(&comp);
        let mut coverage = build_coverage(&self.graph, grid, &targets, &cfg.sensor, &cfg.coverage_raycast);
        // A view already observed saw what it could; targets it was predicted
        // to see but that remain unknown are not visible from it after all.
        for (v, row) in coverage.visible.iter_mut().enumerate() {
            if self.visited[v] && v != current {
                row.iter_mut().for_each(|x| *x = false);
            }
        }

        let mut record = PlanRecord {
            time,
            lookats: lookats.len(),
            targets: targets.len(),
            target_kinds: LookAtKind::ALL.map(|k| targets.iter().filter(|t| t.kind == k).count()),
            dropped_targets: 0,
            graph_vertices: self.graph.len(),
            graph_edges: self.graph.edge_count(),
            problem_views: 0,
            status: None,
            objective: None,
            planned: vec![],
            fallback: false,
        };

        let planned: Vec<usize> = match cfg.planner {
            Planner::GreedyBestfirst => {
                let mut covered: Vec<bool> = (0..coverage.n_targets()).map(|c| coverage.get(current, c)).collect();
                let mut excluded = self.visited.clone();
                excluded[current] = true;
                let mut at = current;
                let mut out = Vec::new();
                for step in 0..cfg.greedy_horizon {
                    let Some(next) = greedy_bestfirst_step(&self.graph, &coverage, at, &covered, &excluded) else {
                        break;
                    };
                    let gain = (0..coverage.n_targets()).any(|c| !covered[c] && coverage.get(next, c));
                    if !gain && step > 0 {
                        break;
                    }
                    for (c, flag) in covered.iter_mut().enumerate() {
                        *flag |= coverage.get(next, c);
                    }
                    excluded[next] = true;
                    out.push(next);
                    at = next;
                }
                out
            }
            Planner::GoVmp | Planner::CoverageGreedy => {
                let (problem, keep, dropped) = self.problem(&sp, &comp, current, &coverage);
                record.dropped_targets = dropped;
                record.problem_views = problem.n;
                let sol: Option<PlanSolution> = if cfg.planner == Planner::GoVmp {
                    let opts = SolveOptions {
                        time_limit: cfg.solver_time_limit,
                        node_limit: cfg.solver_node_limit,
                        ..SolveOptions::default()
                    };
                    let s = solve(&problem, &opts);
                    record.status = Some(s.status);
                    if s.status.is_feasible() {
                        Some(s)
                    } else {
                        record.fallback = true;
                        greedy_warm_start(&problem)
                    }
                } else {
                    let s = coverage_greedy_plan(&problem);
                    record.status = s.as_ref().map(|s| s.status);
                    s
                };
                match sol {
                    Some(s) if s.ordered_path.len() > 1 => {
                        record.objective = Some(s.objective);
                        s.ordered_path.iter().skip(1).map(|&i| keep[i]).collect()
                    }
                    _ => Vec::new(),
                }
            }
        };
        let planned = if planned.is_empty() {
            record.fallback = true;
            self.exploration_hop(&sp, &comp, current)
        } else {
            planned
        };
        record.planned = planned.clone();
        (self.expand(&sp, &comp, current, &planned), record, sampled)
    }
}

/// Maps one segment. The grid carries over between segments.
pub fn run_segment(
    scenario: &Scenario,
    grid: &mut VoxelGrid,
    segment: usize,
    config: &MissionConfig,
    seed: u64,
) -> Result<SegmentReport> {
    config.validate()?;
    let geom = scenario
        .segments
        .get(segment)
        .ok_or_else(|| Error::InvalidInput(format!("scenario has no segment {segment}")))?;
    let model = GantryWristModel::new(geom.workspace);
    let start_pose =
        ViewPose { position: geom.start_position, direction: geom.start_direction.normalize(), target: None };
    let start_config = model
        .ik(&start_pose)
        .filter(|q| model.trajectory_valid(q, q, grid))
        .ok_or_else(|| Error::InvalidInput(format!("segment {segment} start pose is not reachable")))?;
    let start = View { pose: start_pose, config: start_config };
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    noise_rng.set_stream(2 * segment as u64);
    let mut seg = Segment {
        scenario,
        config,
        model,
        graph: ViewMotionGraph::new(start.clone(), config.similarity),
        visited: vec![false],
        noise_rng,
    };

    let mut t = 0.0;
    let mut planning_wall = 0.0;
    seg.observe(grid, &start.pose);
    seg.mark_visited(0);
    t += config.sensing_time;
    let mut executed =
        vec![ExecutedView { vertex: 0, q: start.config.q.clone(), time: 0.0, hop_cost: 0.0, observed: true }];
    let mut motion = 0.0;
    let mut plans = Vec::new();
    let mut queue: VecDeque<Hop> = VecDeque::new();
    let mut last_opt: Option<f64> = None;
    let mut current = 0usize;
    let mut cycle = 0u64;
    let mut ended_early = false;
    const EPS: f64 = 1e-9;

    loop {
        let due = last_opt.map_or(true, |lo| t - lo >= config.replan_interval - EPS);
        if due && t < config.segment_budget {
            let clock = Instant::now();
            let (hops, record, sampled) = seg.plan_cycle(grid, current, seed, cycle, t, segment);
            planning_wall += clock.elapsed().as_secs_f64();
            log::debug!(
                "segment {segment} cycle {cycle} t={t:.2}: {} targets, status {:?}, {} planned",
                record.targets,
                record.status,
                record.planned.len()
            );
            cycle += 1;
            last_opt = Some(t);
            plans.push(record);
            queue = hops.into();
            if queue.is_empty() && !sampled {
                ended_early = true;
                break;
            }
        }
        let Some((next, observe)) = queue.pop_front() else {
            if t >= config.segment_budget {
                break;
            }
            // Idle until the next replanning tick.
            t = last_opt.map_or(t, |lo| t.max(lo + config.replan_interval));
            continue;
        };
        let from = seg.graph.vertex(current).config.clone();
        let to = seg.graph.vertex(next).config.clone();
        if seg.graph.edge_weight(current, next).is_none() || !seg.model.trajectory_valid(&from, &to, grid) {
            seg.graph.remove_edge(current, next);
            queue.clear();
            continue;
        }
        let cost = seg.model.joint_distance(&from, &to);
        motion += cost;
        t += cost / config.arm_speed;
        current = next;
        executed.push(ExecutedView { vertex: next, q: to.q.clone(), time: t, hop_cost: cost, observed: observe });
        if observe {
            let pose = seg.graph.vertex(next).pose;
            seg.observe(grid, &pose);
            seg.mark_visited(next);
            t += config.sensing_time;
        }
    }

    Ok(SegmentReport {
        segment,
        views_executed: executed.iter().filter(|e| e.observed).count(),
        executed,
        motion_cost: motion,
        plans,
        map_exec_s: t,
        end_time: t,
        ended_early,
        roi_voxels: grid.count_state(VoxelState::Roi),
        planning_wall_s: planning_wall,
    })
}

/// Maps every segment in order, carrying the grid forward, and scores the
/// result against the scenario's ground truth.
pub fn run_mission(scenario: &Scenario, config: &MissionConfig, seed: u64) -> Result<(MissionReport, VoxelGrid)> {
    config.validate()?;
    scenario.validate()?;
    let mut grid = scenario.empty_grid()?;
    let gt = ground_truth(scenario, &grid);
    let mut segments = Vec::new();
    let mut segment_metrics = Vec::new();
    let mut total_time = 0.0;
    for s in 0..scenario.segments.len() {
        if s > 0 {
            total_time += config.trolley_time;
        }
        let report = run_segment(scenario, &mut grid, s, config, seed)?;
        total_time += report.end_time;
        segment_metrics.push(evaluate(&grid, &gt.for_segment(s), report.motion_cost));
        segments.push(report);
    }
    let motion_cost = segments.iter().map(|s| s.motion_cost).sum();
    let metrics = evaluate(&grid, &gt, motion_cost);
    let report = MissionReport {
        scenario: scenario.name.clone(),
        planner: config.planner,
        seed,
        config: config.clone(),
        segments,
        motion_cost,
        total_time,
        segment_metrics,
        metrics,
    };
    Ok((report, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, Vec3};
    use crate::sim_world::{Fruit, SegmentGeometry};
    use crate::view_sampling::JointConfig;

    fn one_fruit() -> Scenario {
        Scenario {
            name: "one".into(),
            seed: 0,
            resolution: 0.01,
            bounds: Aabb::new(Vec3::new(0.0, -0.25, 0.0), Vec3::new(0.5, 0.6, 0.8)),
            segments: vec![SegmentGeometry {
                index: 0,
                workspace: Aabb::new(Vec3::new(0.0, 0.12, 0.1), Vec3::new(0.5, 0.55, 0.75)),
                start_position: Vec3::new(0.25, 0.42, 0.4),
                start_direction: -Vec3::y(),
            }],
            fruits: vec![Fruit { center: Vec3::new(0.25, 0.0, 0.4), radii: Vec3::repeat(0.03), segment: 0 }],
            occluders: vec![],
            placement_failures: 0,
        }
    }

    fn quick() -> MissionConfig {
        MissionConfig { noise_sigma: 0.0, segment_budget: 30.0, solver_node_limit: Some(20_000), ..Default::default() }
    }

    #[test]
    fn names_round_trip() {
        for p in Planner::ALL {
            assert_eq!(p.name().parse::<Planner>().unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{}\"", p.name()));
        }
        for t in TargetSelection::ALL {
            assert_eq!(t.name().parse::<TargetSelection>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{}\"", t.name()));
        }
        assert!("nbv".parse::<Planner>().is_err());
    }

    #[test]
    fn zero_budget_is_one_observation() {
        let s = one_fruit();
        let mut grid = s.empty_grid().unwrap();
        let cfg = MissionConfig { segment_budget: 0.0, ..quick() };
        let r = run_segment(&s, &mut grid, 0, &cfg, 1).unwrap();
        assert_eq!(r.executed.len(), 1);
        assert!(r.plans.is_empty());
        assert_eq!(r.motion_cost, 0.0);
        assert!(grid.count_state(VoxelState::Roi) > 0);
    }

    #[test]
    fn hop_costs_replay() {
        let s = one_fruit();
        let mut grid = s.empty_grid().unwrap();
        let cfg = quick();
        let r = run_segment(&s, &mut grid, 0, &cfg, 3).unwrap();
        let model = GantryWristModel::new(s.segments[0].workspace);
        let mut total = 0.0;
        for w in r.executed.windows(2) {
            let d = model.joint_distance(&JointConfig { q: w[0].q.clone() }, &JointConfig { q: w[1].q.clone() });
            assert!((d - w[1].hop_cost).abs() < 1e-12);
            assert!(w[1].time >= w[0].time);
            total += d;
        }
        assert!((total - r.motion_cost).abs() < 1e-9);
        assert!(r.executed.len() > 1);
        for p in r.plans.windows(2) {
            assert!(p[1].time - p[0].time >= cfg.replan_interval - 1e-9);
        }
        assert!(r.plans.iter().all(|p| p.time < cfg.segment_budget));
    }

    #[test]
    fn bestfirst_prefers_cheaper_equal_gain() {
        let model = GantryWristModel::new(Aabb::new(Vec3::zeros(), Vec3::repeat(2.0)));
        let mk = |x: f64| {
            let pose = ViewPose { position: Vec3::new(x, 0.5, 0.5), direction: -Vec3::y(), target: None };
            View { config: model.ik(&pose).unwrap(), pose }
        };
        let mut g = ViewMotionGraph::new(mk(0.1), SimilarityThresholds::default());
        g.add_vertex(mk(1.1), &model).unwrap();
        g.add_vertex(mk(0.4), &model).unwrap();
        let b = Aabb::new(Vec3::zeros(), Vec3::repeat(2.0));
        g.connect_knn(&VoxelGrid::new(0.05, b).unwrap(), &model, Sparsity::Complete);
        let mut cov = CoverageMatrix::new(3, (0..5).map(|i| crate::world_model::VoxelKey::new(i, 0, 0)).collect());
        for c in 0..5 {
            cov.set(1, c, true);
            cov.set(2, c, true);
        }
        let none = vec![false; 3];
        assert_eq!(greedy_bestfirst_step(&g, &cov, 0, &[false; 5], &none), Some(2));
        let zero = CoverageMatrix::new(3, vec![]);
        assert_eq!(greedy_bestfirst_step(&g, &zero, 0, &[], &none), Some(1));
        assert_eq!(greedy_bestfirst_step(&g, &zero, 0, &[], &[false, true, true]), None);
    }
}
