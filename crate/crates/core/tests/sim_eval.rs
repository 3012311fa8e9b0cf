use std::collections::{BTreeSet, HashMap, VecDeque};

use govmp_core::evaluation::{cluster_from_members, detect_fruit_clusters, surface_coverage, MIN_CLUSTER_SIZE};
use govmp_core::sim_world::{ground_truth, render_depth, CameraModel, Fruit, SegmentGeometry};
use govmp_core::{
    generate_scenario, Aabb, PointLabel, Scenario, ScenarioSpec, Vec3, ViewPose, VoxelGrid, VoxelKey, VoxelState,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn on_fruit(s: &Scenario, p: &Vec3, tol: f64) -> bool {
    s.fruits.iter().any(|f| {
        let q = (p - f.center).component_div(&f.radii).norm();
        (q - 1.0).abs() * f.radii.min() <= tol || (q - 1.0).abs() <= tol / f.radii.max()
    })
}

fn on_box(s: &Scenario, p: &Vec3, tol: f64) -> bool {
    s.occluders.iter().any(|b| {
        let inside = b.expanded(tol).contains(p);
        let near_face = (0..3).any(|i| (p[i] - b.min[i]).abs() <= tol || (p[i] - b.max[i]).abs() <= tol);
        inside && near_face
    })
}

fn random_pose<R: Rng>(rng: &mut R, s: &Scenario) -> ViewPose {
    let seg = &s.segments[rng.gen_range(0..s.segments.len())];
    let ws = seg.workspace;
    let p = Vec3::new(
        rng.gen_range(ws.min.x..ws.max.x),
        rng.gen_range(ws.min.y..ws.max.y),
        rng.gen_range(ws.min.z..ws.max.z),
    );
    let f = &s.fruits[rng.gen_range(0..s.fruits.len())];
    ViewPose::looking_at(p, f.center + Vec3::new(rng.gen_range(-0.05..0.05), 0.0, rng.gen_range(-0.05..0.05)), None)
}

#[test]
fn noiseless_points_lie_on_surfaces() {
    let s = generate_scenario(&ScenarioSpec { segments: 2, occlusion_density: 1.0, seed: 4, ..Default::default() })
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut total = 0;
    for _ in 0..10 {
        let pose = random_pose(&mut rng, &s);
        let pts = render_depth(&s, &pose, &CameraModel::default(), 0.0, &mut rng);
        total += pts.len();
        for (p, label) in pts {
            match label {
                PointLabel::Fruit => assert!(on_fruit(&s, &p, 1e-6), "{p:?}"),
                PointLabel::Plant => assert!(on_box(&s, &p, 1e-6), "{p:?}"),
            }
            assert!((p - pose.position).norm() <= CameraModel::default().max_range + 1e-9);
        }
    }
    assert!(total > 0);
}

#[test]
fn noisy_fruit_points_stay_near_a_fruit() {
    let s = generate_scenario(&ScenarioSpec { segments: 1, seed: 2, ..Default::default() }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sigma = 0.003;
    for _ in 0..5 {
        let pose = random_pose(&mut rng, &s);
        for (p, label) in render_depth(&s, &pose, &CameraModel::default(), sigma, &mut rng) {
            if label == PointLabel::Fruit {
                assert!(on_fruit(&s, &p, 6.0 * sigma));
            }
        }
    }
}

#[test]
fn reobserving_is_idempotent() {
    let s = generate_scenario(&ScenarioSpec { segments: 1, seed: 6, ..Default::default() }).unwrap();
    let mut grid = s.empty_grid().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pose = random_pose(&mut rng, &s);
    let cam = CameraModel::default();
    let pts = render_depth(&s, &pose, &cam, 0.0, &mut rng);
    grid.integrate_observation(&pose.position, &pts);
    let before = grid.known_cells();
    let again = render_depth(&s, &pose, &cam, 0.0, &mut rng);
    assert_eq!(pts, again);
    grid.integrate_observation(&pose.position, &again);
    assert_eq!(grid.known_cells(), before);
}

fn lone_sphere(r: f64) -> Scenario {
    Scenario {
        name: "sphere".into(),
        seed: 0,
        resolution: 0.01,
        bounds: Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)),
        segments: vec![SegmentGeometry {
            index: 0,
            workspace: Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)),
            start_position: Vec3::new(0.503, 0.8, 0.497),
            start_direction: -Vec3::y(),
        }],
        fruits: vec![Fruit { center: Vec3::new(0.503, 0.5, 0.497), radii: Vec3::repeat(r), segment: 0 }],
        occluders: vec![],
        placement_failures: 0,
    }
}

#[test]
fn head_on_coverage_equals_ray_hit_census() {
    let s = lone_sphere(0.04);
    let mut grid = s.empty_grid().unwrap();
    let pose = ViewPose { position: s.segments[0].start_position, direction: -Vec3::y(), target: None };
    let cam = CameraModel { width: 128, height: 96, ..Default::default() };
    let pts = render_depth(&s, &pose, &cam, 0.0, &mut ChaCha8Rng::seed_from_u64(0));
    grid.integrate_observation(&pose.position, &pts);
    let gt = ground_truth(&s, &grid);
    let surface: BTreeSet<VoxelKey> = gt.fruits[0].surface.iter().copied().collect();
    let hit: BTreeSet<VoxelKey> = pts.iter().map(|(p, _)| grid.key_of(p).unwrap()).collect();
    assert!(hit.is_subset(&surface));
    let expected = 100.0 * hit.len() as f64 / surface.len() as f64;
    let got = surface_coverage(&grid, &gt);
    assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    // Only the near side is visible.
    assert!(got > 20.0 && got < 60.0, "{got}");
}

#[test]
fn full_voxelization_hull_is_close_to_true_volume() {
    // Twelve or more voxels per radius keep the discretization bias of the
    // center hull under ten percent.
    let radii_cases = [Vec3::repeat(0.03), Vec3::new(0.025, 0.035, 0.04), Vec3::repeat(0.04)];
    for (i, radii) in radii_cases.into_iter().enumerate() {
        let grid = VoxelGrid::new(0.0025, Aabb::new(Vec3::repeat(0.4), Vec3::repeat(0.6))).unwrap();
        let f = Fruit { center: Vec3::new(0.5003 + 0.001 * i as f64, 0.5, 0.4998), radii, segment: 0 };
        let d = grid.dims();
        let mut members = Vec::new();
        for x in 0..d[0] {
            for y in 0..d[1] {
                for z in 0..d[2] {
                    let k = VoxelKey::new(x, y, z);
                    if f.implicit(&grid.center(&k)) <= 0.0 {
                        members.push(k);
                    }
                }
            }
        }
        let c = cluster_from_members(&grid, members);
        let ratio = c.hull_volume / f.volume();
        assert!((ratio - 1.0).abs() <= 0.10, "radii {radii:?}: ratio {ratio}");
        assert!((c.centroid - f.center).norm() < 0.002);
    }
}

#[test]
fn ground_truth_volume_is_closed_form() {
    let s = generate_scenario(&ScenarioSpec { segments: 1, seed: 1, ..Default::default() }).unwrap();
    let grid = s.empty_grid().unwrap();
    let gt = ground_truth(&s, &grid);
    for (f, t) in s.fruits.iter().zip(&gt.fruits) {
        let v = 4.0 / 3.0 * std::f64::consts::PI * f.radii.x * f.radii.y * f.radii.z;
        assert!((t.volume - v).abs() < 1e-15);
        assert_eq!(t.centroid, f.center);
        assert!(!t.surface.is_empty());
    }
}

/// Flood fill over a dense label array.
fn flood_components(grid: &VoxelGrid) -> Vec<Vec<VoxelKey>> {
    let d = grid.dims();
    let mut label: HashMap<VoxelKey, usize> = HashMap::new();
    let mut comps: Vec<Vec<VoxelKey>> = Vec::new();
    for x in 0..d[0] {
        for y in 0..d[1] {
            for z in 0..d[2] {
                let k = VoxelKey::new(x, y, z);
                if grid.state(&k) != VoxelState::Roi || label.contains_key(&k) {
                    continue;
                }
                let id = comps.len();
                let mut comp = Vec::new();
                let mut q = VecDeque::from([k]);
                label.insert(k, id);
                while let Some(c) = q.pop_front() {
                    comp.push(c);
                    for dx in -1..=1 {
                        for dy in -1..=1 {
                            for dz in -1..=1 {
                                let n = c.offset([dx, dy, dz]);
                                if grid.in_bounds(&n) && grid.state(&n) == VoxelState::Roi && !label.contains_key(&n) {
                                    label.insert(n, id);
                                    q.push_back(n);
                                }
                            }
                        }
                    }
                }
                comp.sort();
                comps.push(comp);
            }
        }
    }
    comps.retain(|c| c.len() >= MIN_CLUSTER_SIZE);
    comps.sort();
    comps
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn clusters_match_flood_fill(seed in 0u64..100_000, density in 0.01f64..0.25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut grid = VoxelGrid::new(0.1, Aabb::new(Vec3::zeros(), Vec3::repeat(1.2))).unwrap();
        for x in 0..12 {
            for y in 0..12 {
                for z in 0..12 {
                    if rng.gen_bool(density) {
                        grid.set_state(VoxelKey::new(x, y, z), VoxelState::Roi).unwrap();
                    }
                }
            }
        }
        let mut got: Vec<Vec<VoxelKey>> = detect_fruit_clusters(&grid).into_iter().map(|c| c.members).collect();
        got.sort();
        prop_assert_eq!(got, flood_components(&grid));
        for c in detect_fruit_clusters(&grid) {
            let mean: Vec3 = c.members.iter().map(|k| grid.center(k)).sum::<Vec3>() / c.members.len() as f64;
            prop_assert!((mean - c.centroid).norm() < 1e-12);
        }
    }

    #[test]
    fn scenarios_respect_invariants(seed in 0u64..10_000, segs in 1usize..4, fruits in 1usize..8, occ in 0.0f64..1.5) {
        let s = generate_scenario(&ScenarioSpec { segments: segs, fruits_per_segment: fruits, occlusion_density: occ, seed, ..Default::default() }).unwrap();
        prop_assert_eq!(s.fruits.len() + s.placement_failures, segs * fruits);
        for (i, a) in s.fruits.iter().enumerate() {
            prop_assert!(s.bounds.contains(&a.center));
            prop_assert!(s.segments[a.segment].workspace.min.x <= a.center.x && a.center.x <= s.segments[a.segment].workspace.max.x);
            for b in &s.fruits[i + 1..] {
                prop_assert!(!a.bbox().intersects(&b.bbox()));
            }
            for o in &s.occluders {
                prop_assert!(!a.bbox().intersects(o));
            }
        }
        for o in &s.occluders {
            prop_assert!(s.bounds.contains(&o.min) && s.bounds.contains(&o.max));
        }
    }
}
