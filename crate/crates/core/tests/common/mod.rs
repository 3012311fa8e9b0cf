//! Independent reference implementations shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;

use govmp_core::world_model::RaycastOptions;
use govmp_core::{Aabb, RaycastResult, Vec3, VoxelGrid, VoxelKey, VoxelState};
use rand::Rng;

/// Random grid over `[0, side]^3` with every voxel drawn independently.
pub fn random_grid<R: Rng>(rng: &mut R, res: f64, side: f64, p_free: f64, p_occ: f64, p_roi: f64) -> VoxelGrid {
    let mut g = VoxelGrid::new(res, Aabb::new(Vec3::zeros(), Vec3::repeat(side))).unwrap();
    let d = g.dims();
    for x in 0..d[0] {
        for y in 0..d[1] {
            for z in 0..d[2] {
                let u: f64 = rng.gen();
                let s = if u < p_free {
                    VoxelState::Free
                } else if u < p_free + p_occ {
                    VoxelState::Occupied
                } else if u < p_free + p_occ + p_roi {
                    VoxelState::Roi
                } else {
                    continue;
                };
                g.set_state(VoxelKey::new(x, y, z), s).unwrap();
            }
        }
    }
    g
}

pub fn voxel_box(grid: &VoxelGrid, k: &VoxelKey) -> Aabb {
    let h = Vec3::repeat(0.5 * grid.resolution());
    let c = grid.center(k);
    Aabb::new(c - h, c + h)
}

/// Voxels whose cube the segment passes through with positive length,
/// ordered by entry parameter. Brute force over the segment's bounding box.
pub fn naive_walk(grid: &VoxelGrid, from: &Vec3, to: &Vec3) -> Vec<VoxelKey> {
    let d = to - from;
    let lo = from.inf(to);
    let hi = from.sup(to);
    let res = grid.resolution();
    let min = grid.bounds().min;
    let dims = grid.dims();
    let idx = |v: f64, i: usize| (((v - min[i]) / res).floor() as i32).clamp(0, dims[i] - 1);
    let mut hits: Vec<(f64, VoxelKey)> = Vec::new();
    for x in idx(lo.x, 0)..=idx(hi.x, 0) {
        for y in idx(lo.y, 1)..=idx(hi.y, 1) {
            for z in idx(lo.z, 2)..=idx(hi.z, 2) {
                let k = VoxelKey::new(x, y, z);
                let b = voxel_box(grid, &k);
                // Slab test restricted to t in [0, 1].
                let mut t0 = 0.0f64;
                let mut t1 = 1.0f64;
                let mut empty = false;
                for i in 0..3 {
                    if d[i] == 0.0 {
                        if from[i] < b.min[i] || from[i] >= b.max[i] {
                            empty = true;
                        }
                    } else {
                        let a = (b.min[i] - from[i]) / d[i];
                        let c = (b.max[i] - from[i]) / d[i];
                        t0 = t0.max(a.min(c));
                        t1 = t1.min(a.max(c));
                    }
                }
                if !empty && t1 - t0 > 1e-12 {
                    hits.push((t0, k));
                }
            }
        }
    }
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    hits.into_iter().map(|(_, k)| k).collect()
}

/// Line of sight from the naive walk: the first voxel strictly between the
/// origin's and target's voxels that is opaque.
pub fn naive_raycast(grid: &VoxelGrid, origin: &Vec3, target: &Vec3, opts: &RaycastOptions) -> RaycastResult {
    if (target - origin).norm() > opts.max_range {
        return RaycastResult::OutOfRange;
    }
    let walk = naive_walk(grid, origin, target);
    let first = grid.key_of(origin);
    let last = grid.key_of(target);
    for k in walk {
        if Some(k) == first || Some(k) == last {
            continue;
        }
        let s = grid.state(&k);
        if s.is_obstacle() || (opts.unknown_blocks && s == VoxelState::Unknown) {
            return RaycastResult::Blocked(k);
        }
    }
    RaycastResult::Visible
}

/// Every coarse cell of the grid tested against every ROI voxel.
pub fn brute_inflate(grid: &VoxelGrid, radius: f64) -> BTreeSet<VoxelKey> {
    let roi: Vec<Vec3> = grid.keys_in_state(VoxelState::Roi).iter().map(|k| grid.center(k)).collect();
    let d = grid.dims();
    let res2 = 2.0 * grid.resolution();
    let cd = [(d[0] + 1) / 2, (d[1] + 1) / 2, (d[2] + 1) / 2];
    let mut out = BTreeSet::new();
    for x in 0..cd[0] {
        for y in 0..cd[1] {
            for z in 0..cd[2] {
                let c = grid.bounds().min + Vec3::new(x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5) * res2;
                if !roi.iter().any(|r| (r - c).norm() <= radius) {
                    continue;
                }
                let mut all_unknown = true;
                for dx in 0..2 {
                    for dy in 0..2 {
                        for dz in 0..2 {
                            let k = VoxelKey::new(2 * x + dx, 2 * y + dy, 2 * z + dz);
                            if k.0.iter().zip(d).all(|(&v, m)| v < m) && grid.state(&k) != VoxelState::Unknown {
                                all_unknown = false;
                            }
                        }
                    }
                }
                if all_unknown {
                    out.insert(VoxelKey::new(x, y, z));
                }
            }
        }
    }
    out
}

pub fn random_point<R: Rng>(rng: &mut R, b: &Aabb) -> Vec3 {
    Vec3::new(rng.gen_range(b.min.x..b.max.x), rng.gen_range(b.min.y..b.max.y), rng.gen_range(b.min.z..b.max.z))
}
