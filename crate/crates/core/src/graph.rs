//! View motion graph: views as vertices, collision-free motions as weighted
//! undirected edges, plus the view/target visibility matrix.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontier::LookAtVoxel;
use crate::geometry::Vec3;
use crate::view_sampling::{is_similar, MotionModel, SensorModel, View, ViewPose};
use crate::world_model::{RaycastOptions, RaycastResult, VoxelGrid, VoxelKey};

/// How densely vertices are linked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Sparsity {
    Complete,
    Knn(usize),
}

impl Sparsity {
    pub const DENSE: Sparsity = Sparsity::Knn(10);
    pub const SPARSE: Sparsity = Sparsity::Knn(5);
}

impl Default for Sparsity {
    fn default() -> Self {
        Sparsity::SPARSE
    }
}

impl fmt::Display for Sparsity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sparsity::Complete => f.write_str("com"),
            Sparsity::Knn(10) => f.write_str("den"),
            Sparsity::Knn(5) => f.write_str("spa"),
            Sparsity::Knn(k) => write!(f, "k{k}"),
        }
    }
}

impl FromStr for Sparsity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "com" | "complete" => Ok(Sparsity::Complete),
            "den" | "dense" => Ok(Sparsity::DENSE),
            "spa" | "sparse" => Ok(Sparsity::SPARSE),
            _ => s
                .strip_prefix('k')
                .and_then(|k| k.parse().ok())
                .filter(|&k| k > 0)
                .map(Sparsity::Knn)
                .ok_or_else(|| Error::Parse(format!("unknown sparsity {s:?} (com, den, spa or kN)"))),
        }
    }
}

impl TryFrom<String> for Sparsity {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Sparsity> for String {
    fn from(s: Sparsity) -> String {
        s.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityThresholds {
    pub angle_deg: f64,
    pub joint: f64,
}

impl Default for SimilarityThresholds {
    fn default() -> Self {
        Self { angle_deg: 15.0, joint: 0.2 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ViewMotionGraph {
    vertices: Vec<View>,
    /// Keyed by `(min, max)` vertex index.
    edges: BTreeMap<(usize, usize), f64>,
    pub similarity: SimilarityThresholds,
}

/// Serialized graph, as consumed by `solve --graph`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphDump {
    pub vertices: Vec<View>,
    pub edges: Vec<(usize, usize, f64)>,
}

impl ViewMotionGraph {
    /// New graph whose vertex 0 is the robot's current view.
    pub fn new(start: View, similarity: SimilarityThresholds) -> Self {
        Self { vertices: vec![start], edges: BTreeMap::new(), similarity }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> &View {
        &self.vertices[i]
    }

    pub fn vertices(&self) -> &[View] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_weight(&self, i: usize, j: usize) -> Option<f64> {
        self.edges.get(&(i.min(j), i.max(j))).copied()
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> Option<f64> {
        self.edges.remove(&(i.min(j), i.max(j)))
    }

    pub fn neighbors(&self, i: usize) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self
            .edges
            .iter()
            .filter_map(|(&(a, b), &w)| {
                if a == i {
                    Some((b, w))
                } else if b == i {
                    Some((a, w))
                } else {
                    None
                }
            })
            .collect();
        out.sort_by_key(|&(j, _)| j);
        out
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.keys().filter(|&&(a, b)| a == i || b == i).count()
    }

    /// Vertices left without any edge.
    pub fn unreachable(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.len()];
        for &(a, b) in self.edges.keys() {
            deg[a] += 1;
            deg[b] += 1;
        }
        (0..self.len()).filter(|&i| deg[i] == 0).collect()
    }

    /// Vertices connected to `start`, ascending.
    pub fn component(&self, start: usize) -> Vec<usize> {
        let mut adj = vec![Vec::new(); self.len()];
        for &(a, b) in self.edges.keys() {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        (0..self.len()).filter(|&i| seen[i]).collect()
    }

    /// Appends `view` unless it is similar to an existing vertex.
    pub fn add_vertex(&mut self, view: View, model: &dyn MotionModel) -> Option<usize> {
        let th = self.similarity;
        if self.vertices.iter().any(|v| is_similar(v, &view, th.angle_deg, th.joint, model)) {
            return None;
        }
        self.vertices.push(view);
        Some(self.vertices.len() - 1)
    }

    /// Links every vertex to its nearest neighbors in joint space whose
    /// connecting trajectory is collision-free. Existing edges are kept.
    pub fn connect_knn(&mut self, grid: &VoxelGrid, model: &dyn MotionModel, sparsity: Sparsity) {
        let n = self.len();
        if n < 2 {
            return;
        }
        let k = match sparsity {
            Sparsity::Complete => n - 1,
            Sparsity::Knn(k) => k,
        };
        let vertices = &self.vertices;
        let per_vertex: Vec<Vec<(usize, usize, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut cand: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (model.joint_distance(&vertices[i].config, &vertices[j].config), j))
                    .filter(|&(d, _)| d > 0.0)
                    .collect();
                cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut out = Vec::with_capacity(k);
                for (d, j) in cand {
                    if out.len() >= k {
                        break;
                    }
                    if model.trajectory_valid(&vertices[i].config, &vertices[j].config, grid) {
                        out.push((i.min(j), i.max(j), d));
                    }
                }
                out
            })
            .collect();
        for (a, b, d) in per_vertex.into_iter().flatten() {
            self.edges.entry((a, b)).or_insert(d);
        }
    }

    pub fn dump(&self) -> GraphDump {
        GraphDump { vertices: self.vertices.clone(), edges: self.edges().collect() }
    }

    pub fn from_dump(dump: GraphDump, similarity: SimilarityThresholds) -> Result<Self> {
        if dump.vertices.is_empty() {
            return Err(Error::InvalidInput("graph needs at least vertex 0".into()));
        }
        let n = dump.vertices.len();
        let mut edges = BTreeMap::new();
        for (i, j, w) in dump.edges {
            if i >= n || j >= n || i == j || !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidInput(format!("bad edge ({i}, {j}, {w})")));
            }
            edges.insert((i.min(j), i.max(j)), w);
        }
        Ok(Self { vertices: dump.vertices, edges, similarity })
    }
}

/// Binary visibility between views (rows) and targets (columns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageMatrix<T = VoxelKey> {
    pub targets: Vec<T>,
    /// `visible[i][c]` is true when view `i` observes target `c`.
    pub visible: Vec<Vec<bool>>,
}

impl<T: Clone> CoverageMatrix<T> {
    pub fn new(n_views: usize, targets: Vec<T>) -> Self {
        let nt = targets.len();
        Self { targets, visible: vec![vec![false; nt]; n_views] }
    }

    pub fn n_views(&self) -> usize {
        self.visible.len()
    }

    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn get(&self, view: usize, target: usize) -> bool {
        self.visible[view][target]
    }

    pub fn set(&mut self, view: usize, target: usize, value: bool) {
        self.visible[view][target] = value;
    }

    pub fn covering_views(&self, target: usize) -> Vec<usize> {
        (0..self.n_views()).filter(|&i| self.visible[i][target]).collect()
    }

    pub fn covered_by(&self, view: usize) -> Vec<usize> {
        (0..self.n_targets()).filter(|&c| self.visible[view][c]).collect()
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_views(&self, rows: &[usize]) -> Self {
        Self { targets: self.targets.clone(), visible: rows.iter().map(|&r| self.visible[r].clone()).collect() }
    }

    pub fn relabel<U, F: FnMut(usize, &T) -> U>(&self, mut f: F) -> CoverageMatrix<U> {
        CoverageMatrix {
            targets: self.targets.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
            visible: self.visible.clone(),
        }
    }
}

/// Whether a camera at `pose` observes the point `target`.
pub fn observes(
    grid: &VoxelGrid,
    pose: &ViewPose,
    target: &Vec3,
    sensor: &SensorModel,
    raycast: &RaycastOptions,
) -> bool {
    let to = target - pose.position;
    let d = to.norm();
    sensor.in_range(d)
        && sensor.in_fov(&pose.direction, &to)
        && grid.raycast(&pose.position, target, &RaycastOptions { max_range: f64::INFINITY, ..*raycast })
            == RaycastResult::Visible
}

pub fn build_coverage(
    graph: &ViewMotionGraph,
    grid: &VoxelGrid,
    targets: &[LookAtVoxel],
    sensor: &SensorModel,
    raycast: &RaycastOptions,
) -> CoverageMatrix<VoxelKey> {
    let visible: Vec<Vec<bool>> = graph
        .vertices
        .par_iter()
        .map(|v| targets.iter().map(|t| observes(grid, &v.pose, &t.position, sensor, raycast)).collect())
        .collect();
    CoverageMatrix { targets: targets.iter().map(|t| t.key).collect(), visible }
}
