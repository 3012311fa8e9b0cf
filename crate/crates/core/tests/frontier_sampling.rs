mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::random_grid;
use govmp_core::frontier::{candidate_pools, classify_boundary, sample_pools, LookAtPools};
use govmp_core::view_sampling::{is_similar, sample_views, SamplingParams};
use govmp_core::world_model::RaycastOptions;
use govmp_core::{
    extract_lookats, Aabb, ExtractionConfig, GantryWristModel, LookAtKind, LookAtVoxel, MotionModel, RaycastResult,
    SensorModel, Vec3, VoxelGrid, VoxelKey, VoxelState,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Full scan over every voxel of the grid.
fn naive_boundary(grid: &VoxelGrid) -> BTreeMap<VoxelKey, LookAtKind> {
    let d = grid.dims();
    let mut out = BTreeMap::new();
    for x in 0..d[0] {
        for y in 0..d[1] {
            for z in 0..d[2] {
                let k = VoxelKey::new(x, y, z);
                if grid.state(&k) != VoxelState::Unknown {
                    continue;
                }
                let states: Vec<VoxelState> =
                    k.neighbors6().iter().filter(|n| grid.in_bounds(n)).map(|n| grid.state(n)).collect();
                let kind = if states.contains(&VoxelState::Roi) {
                    LookAtKind::RoiUnk
                } else if states.contains(&VoxelState::Occupied) {
                    LookAtKind::OccUnk
                } else if states.contains(&VoxelState::Free) {
                    LookAtKind::FreUnk
                } else {
                    continue;
                };
                out.insert(k, kind);
            }
        }
    }
    out
}

#[test]
fn boundary_pools_match_full_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..8 {
        let grid = random_grid(&mut rng, 0.05, 0.6, 0.3, 0.1, 0.05);
        let expected = naive_boundary(&grid);
        let pools = candidate_pools(&grid, 0.1);
        let mut got = BTreeMap::new();
        for kind in [LookAtKind::OccUnk, LookAtKind::FreUnk, LookAtKind::RoiUnk] {
            for v in pools.get(kind) {
                assert_eq!(v.kind, kind);
                got.insert(v.key, kind);
            }
        }
        assert_eq!(got, expected);
        for (k, kind) in &expected {
            assert_eq!(classify_boundary(&grid, k), Some(*kind));
        }
    }
}

#[test]
fn prior_voxels_come_from_inflation() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let grid = random_grid(&mut rng, 0.02, 0.4, 0.02, 0.0, 0.003);
    let pools = candidate_pools(&grid, 0.08);
    let coarse = grid.inflate_roi(0.08);
    let boundary: BTreeSet<VoxelKey> = pools.pools[..3].iter().flatten().map(|v| v.key).collect();
    let expected: BTreeSet<VoxelKey> = coarse
        .iter()
        .map(|c| VoxelKey::new(2 * c.0[0], 2 * c.0[1], 2 * c.0[2]))
        .filter(|k| !boundary.contains(k))
        .collect();
    let got: BTreeSet<VoxelKey> = pools.get(LookAtKind::Prior).iter().map(|v| v.key).collect();
    assert!(!got.is_empty());
    assert_eq!(got, expected);
    for v in pools.get(LookAtKind::Prior) {
        assert_eq!(grid.state(&v.key), VoxelState::Unknown);
    }
}

#[test]
fn fresh_grid_yields_nothing() {
    let grid = VoxelGrid::new(0.05, Aabb::new(Vec3::zeros(), Vec3::repeat(1.0))).unwrap();
    assert!(extract_lookats(&grid, 60, 0, &ExtractionConfig::default()).is_empty());
}

fn pools_of(sizes: [usize; 4]) -> LookAtPools {
    let mut p = LookAtPools::default();
    for (i, kind) in LookAtKind::ALL.into_iter().enumerate() {
        p.pools[i] = (0..sizes[i])
            .map(|j| LookAtVoxel { key: VoxelKey::new(i as i32, j as i32, 0), kind, position: Vec3::zeros() })
            .collect();
    }
    p
}

#[test]
fn exhausted_kind_is_reallocated() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let drawn = sample_pools(pools_of([100, 100, 0, 100]), 60, &ExtractionConfig::default().mix, &mut rng);
    assert_eq!(drawn.len(), 60);
    assert!(drawn.iter().all(|v| v.kind != LookAtKind::RoiUnk));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let few = sample_pools(pools_of([2, 1, 3, 0]), 60, &ExtractionConfig::default().mix, &mut rng);
    assert_eq!(few.len(), 6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn draws_are_distinct_and_bounded(sizes in prop::array::uniform4(0usize..30), budget in 0usize..80, seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let drawn = sample_pools(pools_of(sizes), budget, &ExtractionConfig::default().mix, &mut rng);
        let total: usize = sizes.iter().sum();
        prop_assert_eq!(drawn.len(), budget.min(total));
        let keys: BTreeSet<VoxelKey> = drawn.iter().map(|v| v.key).collect();
        prop_assert_eq!(keys.len(), drawn.len());
    }

    #[test]
    fn extraction_is_seed_deterministic(seed in 0u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = random_grid(&mut rng, 0.05, 0.5, 0.2, 0.05, 0.02);
        let cfg = ExtractionConfig::default();
        let a = extract_lookats(&grid, 40, seed, &cfg);
        prop_assert_eq!(&a, &extract_lookats(&grid, 40, seed, &cfg));
        for v in &a {
            prop_assert_eq!(grid.state(&v.key), VoxelState::Unknown);
        }
    }
}

fn sampling_scene() -> (VoxelGrid, Vec<LookAtVoxel>, Aabb) {
    let mut grid = VoxelGrid::new(0.02, Aabb::new(Vec3::zeros(), Vec3::repeat(1.0))).unwrap();
    // A wall of occupied voxels and a few ROI voxels in front of it.
    for x in 10..40 {
        for z in 10..40 {
            grid.set_state(VoxelKey::new(x, 25, z), VoxelState::Occupied).unwrap();
        }
    }
    for x in 20..24 {
        grid.set_state(VoxelKey::new(x, 24, 25), VoxelState::Roi).unwrap();
    }
    let lookats = extract_lookats(&grid, 40, 3, &ExtractionConfig::default());
    (grid, lookats, Aabb::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.45, 1.0)))
}

#[test]
fn sampled_views_satisfy_their_contract() {
    let (grid, lookats, ws) = sampling_scene();
    assert!(!lookats.is_empty());
    let sensor = SensorModel::default();
    let model = GantryWristModel::new(ws);
    let params = SamplingParams::default();
    let views = sample_views(&grid, &lookats, &ws, &sensor, &model, 60, 9, &params);
    assert!(!views.is_empty());
    for v in &views {
        let t = v.pose.target.expect("sampled views carry their target");
        let target = grid.center(&t.key);
        assert!(ws.contains(&v.pose.position));
        let d = (target - v.pose.position).norm();
        assert!(sensor.in_range(d), "range {d}");
        assert!((v.pose.direction - (target - v.pose.position).normalize()).norm() < 1e-9);
        let opts = RaycastOptions { max_range: sensor.max_range, ..params.raycast };
        assert_eq!(grid.raycast(&v.pose.position, &target, &opts), RaycastResult::Visible);
        assert!(model.trajectory_valid(&v.config, &v.config, &grid));
        let (p, dir) = model.fk(&v.config);
        assert!((p - v.pose.position).norm() < 1e-12 && (dir - v.pose.direction).norm() < 1e-9);
    }
    assert_eq!(views, sample_views(&grid, &lookats, &ws, &sensor, &model, 60, 9, &params));
}

#[test]
fn unreachable_targets_yield_no_views() {
    let (grid, lookats, _) = sampling_scene();
    let far = Aabb::new(Vec3::new(0.0, 0.0, 0.95), Vec3::new(0.05, 0.05, 1.0));
    let model = GantryWristModel::new(far);
    let views = sample_views(&grid, &lookats, &far, &SensorModel::default(), &model, 20, 1, &SamplingParams::default());
    assert!(views.is_empty());
}

#[test]
fn similarity_needs_both_thresholds() {
    let ws = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0));
    let m = GantryWristModel::new(ws);
    let mk = |p: Vec3, d: Vec3| {
        let pose = govmp_core::ViewPose { position: p, direction: d.normalize(), target: None };
        govmp_core::View { config: m.ik(&pose).unwrap(), pose }
    };
    let a = mk(Vec3::new(0.5, 0.5, 0.5), Vec3::new(1.0, 0.0, 0.0));
    let near_same = mk(Vec3::new(0.55, 0.5, 0.5), Vec3::new(1.0, 0.1, 0.0));
    let far_same = mk(Vec3::new(0.9, 0.5, 0.5), Vec3::new(1.0, 0.0, 0.0));
    let near_turned = mk(Vec3::new(0.5, 0.5, 0.5), Vec3::new(0.0, 1.0, 0.0));
    assert!(is_similar(&a, &near_same, 15.0, 0.2, &m));
    assert!(!is_similar(&a, &far_same, 15.0, 0.2, &m));
    assert!(!is_similar(&a, &near_turned, 15.0, 0.2, &m));
}
