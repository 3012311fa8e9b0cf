//! Post-hoc mission metrics: fruit detection, surface coverage, volume
//! accuracy.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::hull::lattice_hull_volume;
use crate::sim_world::GroundTruth;
use crate::world_model::{VoxelGrid, VoxelKey, VoxelState};

/// Components smaller than this are treated as noise.
pub const MIN_CLUSTER_SIZE: usize = 3;
/// Center-to-center distance within which a cluster counts as a fruit.
pub const MATCH_DISTANCE: f64 = 0.20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FruitCluster {
    /// Sorted Roi voxel keys.
    pub members: Vec<VoxelKey>,
    pub centroid: Vec3,
    /// Convex hull volume of the member voxel centers, m³.
    pub hull_volume: f64,
}

fn neighbors26(k: &VoxelKey) -> impl Iterator<Item = VoxelKey> + '_ {
    (-1..=1).flat_map(move |dx| {
        (-1..=1).flat_map(move |dy| {
            (-1..=1).filter_map(move |dz| ((dx, dy, dz) != (0, 0, 0)).then(|| k.offset([dx, dy, dz])))
        })
    })
}

/// 26-connected components of `keys`, each sorted, ordered by smallest key.
pub fn connected_components(keys: &[VoxelKey]) -> Vec<Vec<VoxelKey>> {
    let sorted: BTreeSet<VoxelKey> = keys.iter().copied().collect();
    let mut seen: HashSet<VoxelKey> = HashSet::with_capacity(sorted.len());
    let mut out = Vec::new();
    for &k in &sorted {
        if !seen.insert(k) {
            continue;
        }
        let mut comp = vec![k];
        let mut stack = vec![k];
        while let Some(c) = stack.pop() {
            for nb in neighbors26(&c) {
                if sorted.contains(&nb) && seen.insert(nb) {
                    comp.push(nb);
                    stack.push(nb);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

pub fn cluster_from_members(grid: &VoxelGrid, members: Vec<VoxelKey>) -> FruitCluster {
    let sum: Vec3 = members.iter().map(|k| grid.center(k)).sum();
    let centroid = sum / members.len().max(1) as f64;
    let lattice: Vec<[i64; 3]> = members.iter().map(|k| k.0.map(i64::from)).collect();
    let hull_volume = lattice_hull_volume(&lattice) * grid.resolution().powi(3);
    FruitCluster { members, centroid, hull_volume }
}

pub fn detect_fruit_clusters(grid: &VoxelGrid) -> Vec<FruitCluster> {
    connected_components(&grid.keys_in_state(VoxelState::Roi))
        .into_iter()
        .filter(|c| c.len() >= MIN_CLUSTER_SIZE)
        .map(|m| cluster_from_members(grid, m))
        .collect()
}

/// Greedy one-to-one matching by ascending centroid distance. Returns
/// `(cluster, fruit)` pairs; ties go to the lower cluster then fruit index.
pub fn match_fruits(clusters: &[FruitCluster], gt: &GroundTruth) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, c) in clusters.iter().enumerate() {
        for (j, f) in gt.fruits.iter().enumerate() {
            let d = (c.centroid - f.centroid).norm();
            if d <= MATCH_DISTANCE {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_c = vec![false; clusters.len()];
    let mut used_f = vec![false; gt.fruits.len()];
    let mut out = Vec::new();
    for (_, i, j) in pairs {
        if !used_c[i] && !used_f[j] {
            used_c[i] = true;
            used_f[j] = true;
            out.push((i, j));
        }
    }
    out.sort_unstable_by_key(|&(_, j)| j);
    out
}

/// Mean over ground-truth fruits of the share of surface voxels mapped as
/// Roi, in percent. Zero when there are no fruits.
pub fn surface_coverage(grid: &VoxelGrid, gt: &GroundTruth) -> f64 {
    if gt.fruits.is_empty() {
        return 0.0;
    }
    let total: f64 = gt
        .fruits
        .iter()
        .map(|f| {
            if f.surface.is_empty() {
                return 0.0;
            }
            let hit = f.surface.iter().filter(|k| grid.state(k) == VoxelState::Roi).count();
            hit as f64 / f.surface.len() as f64
        })
        .sum();
    100.0 * total / gt.fruits.len() as f64
}

/// Mean over ground-truth fruits of hull volume over true volume, each
/// capped at 100%; unmatched fruits score zero.
pub fn volume_accuracy(clusters: &[FruitCluster], gt: &GroundTruth, matches: &[(usize, usize)]) -> f64 {
    if gt.fruits.is_empty() {
        return 0.0;
    }
    let total: f64 = matches.iter().map(|&(c, f)| (clusters[c].hull_volume / gt.fruits[f].volume).min(1.0)).sum();
    100.0 * total / gt.fruits.len() as f64
}

/// Per-segment or aggregate metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub detected_fruits: usize,
    pub gt_fruits: usize,
    pub surface_coverage_pct: f64,
    pub volume_accuracy_pct: f64,
    pub motion_cost: f64,
}

pub fn evaluate(grid: &VoxelGrid, gt: &GroundTruth, motion_cost: f64) -> MetricsRow {
    let clusters = detect_fruit_clusters(grid);
    let matches = match_fruits(&clusters, gt);
    MetricsRow {
        detected_fruits: matches.len(),
        gt_fruits: gt.fruits.len(),
        surface_coverage_pct: surface_coverage(grid, gt),
        volume_accuracy_pct: volume_accuracy(&clusters, gt, &matches),
        motion_cost,
    }
}

/// One line of the metrics CSV. Column order is fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub scenario: String,
    pub segment: String,
    pub planner: String,
    pub seed: u64,
    pub detected_fruits: usize,
    pub surface_coverage_pct: f64,
    pub volume_accuracy_pct: f64,
    pub motion_cost: f64,
    pub planning_s: f64,
    pub map_exec_s: f64,
    pub views_executed: usize,
}

pub const CSV_HEADER: [&str; 11] = [
    "scenario",
    "segment",
    "planner",
    "seed",
    "detected_fruits",
    "surface_coverage_pct",
    "volume_accuracy_pct",
    "motion_cost",
    "planning_s",
    "map_exec_s",
    "views_executed",
];
