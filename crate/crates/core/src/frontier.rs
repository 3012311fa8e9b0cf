//! Look-at voxel extraction.
//!
//! Unknown voxels bordering known space are classified by the state of their
//! face neighbors; region-prior voxels come from [`VoxelGrid::inflate_roi`].
//! Extraction draws a kind from a fixed mix, then a voxel uniformly from that
//! kind's pool without replacement.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::world_model::{VoxelGrid, VoxelKey, VoxelState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LookAtKind {
    OccUnk,
    FreUnk,
    RoiUnk,
    Prior,
}

impl LookAtKind {
    pub const ALL: [LookAtKind; 4] = [LookAtKind::OccUnk, LookAtKind::FreUnk, LookAtKind::RoiUnk, LookAtKind::Prior];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LookAtVoxel {
    pub key: VoxelKey,
    pub kind: LookAtKind,
    pub position: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    /// Draw probabilities for OCC-UNK, FRE-UNK, ROI-UNK and PRIOR.
    pub mix: [f64; 4],
    /// Inflation radius for region-prior voxels, meters.
    pub prior_radius: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { mix: [0.30, 0.20, 0.35, 0.15], prior_radius: 0.10 }
    }
}

/// Boundary kind of an unknown voxel, by priority ROI > occupied > free.
pub fn classify_boundary(grid: &VoxelGrid, key: &VoxelKey) -> Option<LookAtKind> {
    if !grid.in_bounds(key) || grid.state(key) != VoxelState::Unknown {
        return None;
    }
    let (mut roi, mut occ, mut free) = (false, false, false);
    for n in key.neighbors6() {
        if !grid.in_bounds(&n) {
            continue;
        }
        match grid.state(&n) {
            VoxelState::Roi => roi = true,
            VoxelState::Occupied => occ = true,
            VoxelState::Free => free = true,
            VoxelState::Unknown => {}
        }
    }
    if roi {
        Some(LookAtKind::RoiUnk)
    } else if occ {
        Some(LookAtKind::OccUnk)
    } else if free {
        Some(LookAtKind::FreUnk)
    } else {
        None
    }
}

/// Candidate pools per kind, each sorted by key.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LookAtPools {
    pub pools: [Vec<LookAtVoxel>; 4],
}

impl LookAtPools {
    pub fn get(&self, kind: LookAtKind) -> &[LookAtVoxel] {
        &self.pools[kind.index()]
    }

    pub fn total(&self) -> usize {
        self.pools.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

/// Builds all four pools from the current map.
pub fn candidate_pools(grid: &VoxelGrid, prior_radius: f64) -> LookAtPools {
    let mut frontier: BTreeSet<VoxelKey> = BTreeSet::new();
    for (key, _) in grid.known_cells() {
        for n in key.neighbors6() {
            if grid.in_bounds(&n) && grid.state(&n) == VoxelState::Unknown {
                frontier.insert(n);
            }
        }
    }
    let frontier: Vec<VoxelKey> = frontier.into_iter().collect();
    let classified: Vec<(VoxelKey, Option<LookAtKind>)> =
        frontier.par_iter().map(|k| (*k, classify_boundary(grid, k))).collect();

    let mut out = LookAtPools::default();
    let mut boundary_keys = BTreeSet::new();
    for (key, kind) in classified {
        if let Some(kind) = kind {
            boundary_keys.insert(key);
            out.pools[kind.index()].push(LookAtVoxel { key, kind, position: grid.center(&key) });
        }
    }

    let coarse: Vec<VoxelKey> = grid.inflate_roi(prior_radius).into_iter().collect();
    let prior: Vec<LookAtVoxel> = coarse
        .par_iter()
        .map(|ck| VoxelKey::new(2 * ck.0[0], 2 * ck.0[1], 2 * ck.0[2]))
        .filter(|k| !boundary_keys.contains(k))
        .map(|key| LookAtVoxel { key, kind: LookAtKind::Prior, position: grid.center(&key) })
        .collect();
    out.pools[LookAtKind::Prior.index()] = prior;
    for pool in &mut out.pools {
        pool.sort_unstable_by_key(|v| v.key);
    }
    out
}

/// Draws up to `budget` voxels from `pools`. When a kind runs dry its share
/// is spread over the remaining kinds in proportion to their weights.
pub fn sample_pools<R: Rng>(mut pools: LookAtPools, budget: usize, mix: &[f64; 4], rng: &mut R) -> Vec<LookAtVoxel> {
    let mut out = Vec::with_capacity(budget.min(pools.total()));
    while out.len() < budget {
        let total: f64 = (0..4).filter(|&i| !pools.pools[i].is_empty()).map(|i| mix[i].max(0.0)).sum();
        if total <= 0.0 {
            break;
        }
        let mut u = rng.gen::<f64>() * total;
        let mut chosen = None;
        for i in 0..4 {
            if pools.pools[i].is_empty() || mix[i] <= 0.0 {
                continue;
            }
            chosen = Some(i);
            if u < mix[i] {
                break;
            }
            u -= mix[i];
        }
        let Some(i) = chosen else { break };
        let pool = &mut pools.pools[i];
        let j = rng.gen_range(0..pool.len());
        out.push(pool.swap_remove(j));
    }
    out
}

/// Samples look-at voxels from the current map. An empty result means there
/// is nothing left to look at.
pub fn extract_lookats(grid: &VoxelGrid, budget: usize, seed: u64, config: &ExtractionConfig) -> Vec<LookAtVoxel> {
    if budget == 0 {
        return Vec::new();
    }
    let pools = candidate_pools(grid, config.prior_radius);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_pools(pools, budget, &config.mix, &mut rng)
}
