//! Synthetic fruit scenes with analytic ground truth and a ray-cast depth
//! camera.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use crate::view_sampling::ViewPose;
use crate::world_model::{PointLabel, VoxelGrid, VoxelKey};

/// Axis-aligned ellipsoid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fruit {
    pub center: Vec3,
    pub radii: Vec3,
    pub segment: usize,
}

impl Fruit {
    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.radii.x * self.radii.y * self.radii.z
    }

    /// Implicit function: negative inside, zero on the shell.
    pub fn implicit(&self, p: &Vec3) -> f64 {
        let q = (p - self.center).component_div(&self.radii);
        q.norm_squared() - 1.0
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::from_center_half_extents(self.center, self.radii)
    }

    /// Nearest positive hit distance along a unit ray.
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let o = (origin - self.center).component_div(&self.radii);
        let d = dir.component_div(&self.radii);
        let a = d.norm_squared();
        let b = 2.0 * o.dot(&d);
        let c = o.norm_squared() - 1.0;
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        // Numerically stable roots.
        let qv = -0.5 * (b + b.signum() * sq);
        let (mut t1, mut t2) = if qv != 0.0 { (qv / a, c / qv) } else { (0.0, 0.0) };
        if t1 > t2 {
            std::mem::swap(&mut t1, &mut t2);
        }
        [t1, t2].into_iter().find(|&t| t > 1e-9)
    }
}

fn box_intersect(b: &Aabb, origin: &Vec3, dir: &Vec3) -> Option<f64> {
    let (t0, t1) = b.ray_interval(origin, dir)?;
    [t0, t1].into_iter().find(|&t| t > 1e-9)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentGeometry {
    pub index: usize,
    /// Reachable camera positions.
    pub workspace: Aabb,
    pub start_position: Vec3,
    pub start_direction: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub resolution: f64,
    pub bounds: Aabb,
    pub segments: Vec<SegmentGeometry>,
    pub fruits: Vec<Fruit>,
    /// Leaves and other plant parts.
    pub occluders: Vec<Aabb>,
    /// Fruits requested but not placed.
    #[serde(default)]
    pub placement_failures: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub segments: usize,
    pub fruits_per_segment: usize,
    /// Leaves per fruit, scaled: each fruit gets about `2 * density` leaves.
    pub occlusion_density: f64,
    pub seed: u64,
    pub segment_length: f64,
    pub resolution: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            segments: 16,
            fruits_per_segment: 4,
            occlusion_density: 0.5,
            seed: 0,
            segment_length: 0.5,
            resolution: 0.01,
        }
    }
}

const ROW_Y: f64 = 0.0;
const HEIGHT_LEVELS: [f64; 2] = [0.30, 0.50];

pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    if spec.segments == 0 || spec.fruits_per_segment == 0 {
        return Err(Error::InvalidInput("segments and fruits_per_segment must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let len = spec.segment_length;
    let bounds = Aabb::new(Vec3::new(0.0, -0.25, 0.0), Vec3::new(len * spec.segments as f64, 0.60, 0.80));
    let mut fruits: Vec<Fruit> = Vec::new();
    let mut occluders = Vec::new();
    let mut segments = Vec::new();
    let mut failures = 0;

    for s in 0..spec.segments {
        let x0 = len * s as f64;
        segments.push(SegmentGeometry {
            index: s,
            workspace: Aabb::new(Vec3::new(x0, 0.12, 0.10), Vec3::new(x0 + len, 0.55, 0.75)),
            start_position: Vec3::new(x0 + 0.5 * len, 0.42, 0.40),
            start_direction: -Vec3::y(),
        });
        let stems = [x0 + len * (0.3 + rng.gen_range(-0.03..0.03)), x0 + len * (0.7 + rng.gen_range(-0.03..0.03))];
        let first = fruits.len();
        for _ in 0..spec.fruits_per_segment {
            let mut placed = false;
            for _ in 0..200 {
                let stem = stems[rng.gen_range(0..2)];
                let level = HEIGHT_LEVELS[rng.gen_range(0..2)];
                let radii =
                    Vec3::new(rng.gen_range(0.025..0.04), rng.gen_range(0.025..0.04), rng.gen_range(0.025..0.04));
                let center = Vec3::new(
                    (stem + rng.gen_range(-0.08..0.08)).clamp(x0 + radii.x + 0.01, x0 + len - radii.x - 0.01),
                    ROW_Y + rng.gen_range(-0.04..0.04),
                    level + rng.gen_range(-0.06..0.06),
                );
                let cand = Fruit { center, radii, segment: s };
                let clear = fruits.iter().all(|f| (f.center - center).norm() > f.radii.max() + radii.max() + 0.03);
                if clear {
                    fruits.push(cand);
                    placed = true;
                    break;
                }
            }
            if !placed {
                failures += 1;
            }
        }
        let seg_fruits: Vec<Fruit> = fruits[first..].to_vec();
        let leaves = (spec.occlusion_density * 2.0 * seg_fruits.len() as f64).round() as usize;
        if seg_fruits.is_empty() {
            continue;
        }
        for _ in 0..leaves {
            for _ in 0..50 {
                let f = seg_fruits[rng.gen_range(0..seg_fruits.len())];
                let center = f.center
                    + Vec3::new(rng.gen_range(-0.06..0.06), rng.gen_range(0.05..0.10), rng.gen_range(-0.06..0.06));
                let half = Vec3::new(rng.gen_range(0.02..0.04), 0.003, rng.gen_range(0.015..0.03));
                let leaf = Aabb::from_center_half_extents(center, half);
                let inside = bounds.contains(&leaf.min) && bounds.contains(&leaf.max);
                if !inside || fruits.iter().any(|g| g.bbox().expanded(0.005).intersects(&leaf)) {
                    continue;
                }
                occluders.push(leaf);
                break;
            }
        }
    }
    Ok(Scenario {
        name: format!(
            "synthetic-s{}-f{}-o{}-seed{}",
            spec.segments, spec.fruits_per_segment, spec.occlusion_density, spec.seed
        ),
        seed: spec.seed,
        resolution: spec.resolution,
        bounds,
        segments,
        fruits,
        occluders,
        placement_failures: failures,
    })
}

impl Scenario {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let s: Scenario = serde_json::from_str(&text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidInput("scenario has no segments".into()));
        }
        for f in &self.fruits {
            if !self.bounds.contains(&f.center) || f.radii.iter().any(|r| !(*r > 0.0)) {
                return Err(Error::InvalidInput(format!("fruit at {:?} is invalid", f.center)));
            }
        }
        for b in &self.occluders {
            if !self.bounds.contains(&b.min) || !self.bounds.contains(&b.max) {
                return Err(Error::InvalidInput(format!("occluder {:?} leaves the world bounds", b.center())));
            }
        }
        Ok(())
    }

    pub fn empty_grid(&self) -> Result<VoxelGrid> {
        VoxelGrid::new(self.resolution, self.bounds)
    }

    /// Nearest surface hit along a unit ray within `max_range`.
    pub fn cast_ray(&self, origin: &Vec3, dir: &Vec3, max_range: f64) -> Option<(f64, PointLabel)> {
        let mut best: Option<(f64, PointLabel)> = None;
        for f in &self.fruits {
            if let Some(t) = f.intersect(origin, dir) {
                if t <= max_range && best.map_or(true, |b| t < b.0) {
                    best = Some((t, PointLabel::Fruit));
                }
            }
        }
        for b in &self.occluders {
            if let Some(t) = box_intersect(b, origin, dir) {
                if t <= max_range && best.map_or(true, |x| t < x.0) {
                    best = Some((t, PointLabel::Plant));
                }
            }
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraModel {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view, degrees.
    pub fov_deg: f64,
    pub max_range: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self { width: 64, height: 48, fov_deg: 60.0, max_range: 0.60 }
    }
}

impl CameraModel {
    /// Unit ray directions, row-major from the top-left pixel.
    pub fn rays(&self, pose: &ViewPose) -> Vec<Vec3> {
        let fwd = pose.direction.normalize();
        let mut right = fwd.cross(&Vec3::z());
        if right.norm() < 1e-9 {
            right = Vec3::x();
        }
        let right = right.normalize();
        let up = right.cross(&fwd);
        let th = (0.5 * self.fov_deg.to_radians()).tan();
        let tv = th * self.height as f64 / self.width as f64;
        let mut out = Vec::with_capacity(self.width * self.height);
        for v in 0..self.height {
            for u in 0..self.width {
                let sx = (2.0 * (u as f64 + 0.5) / self.width as f64 - 1.0) * th;
                let sy = (1.0 - 2.0 * (v as f64 + 0.5) / self.height as f64) * tv;
                out.push((fwd + right * sx + up * sy).normalize());
            }
        }
        out
    }
}

/// Simulated depth frame. Rays that hit nothing within range return no point.
pub fn render_depth<R: Rng>(
    scenario: &Scenario,
    pose: &ViewPose,
    camera: &CameraModel,
    noise_sigma: f64,
    rng: &mut R,
) -> Vec<(Vec3, PointLabel)> {
    let noise = (noise_sigma > 0.0).then(|| Normal::new(0.0, noise_sigma).expect("finite sigma"));
    let mut out = Vec::new();
    for dir in camera.rays(pose) {
        if let Some((t, label)) = scenario.cast_ray(&pose.position, &dir, camera.max_range) {
            let r = t + noise.as_ref().map_or(0.0, |n| n.sample(rng));
            out.push((pose.position + dir * r, label));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FruitTruth {
    pub segment: usize,
    /// Voxels the ellipsoid shell passes through, sorted.
    pub surface: Vec<VoxelKey>,
    pub volume: f64,
    pub centroid: Vec3,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub fruits: Vec<FruitTruth>,
}

impl GroundTruth {
    pub fn for_segment(&self, segment: usize) -> GroundTruth {
        GroundTruth { fruits: self.fruits.iter().filter(|f| f.segment == segment).cloned().collect() }
    }
}

/// Voxels of `grid` whose cube straddles the shell of `fruit`.
pub fn surface_voxels(fruit: &Fruit, grid: &VoxelGrid) -> Vec<VoxelKey> {
    let res = grid.resolution();
    let b = fruit.bbox().expanded(res);
    let lo = grid.key_of(&b.min.sup(&grid.bounds().min)).unwrap_or(VoxelKey::new(0, 0, 0));
    let hi = grid.key_of(&b.max.inf(&(grid.bounds().max - Vec3::repeat(1e-9)))).unwrap_or(VoxelKey(grid.dims()));
    let mut out = Vec::new();
    for x in lo.0[0]..=hi.0[0] {
        for y in lo.0[1]..=hi.0[1] {
            for z in lo.0[2]..=hi.0[2] {
                let k = VoxelKey::new(x, y, z);
                if !grid.in_bounds(&k) {
                    continue;
                }
                let c = grid.center(&k);
                let h = 0.5 * res;
                let mut near = Vec3::zeros();
                let mut far = Vec3::zeros();
                for i in 0..3 {
                    near[i] = fruit.center[i].clamp(c[i] - h, c[i] + h);
                    far[i] = if (c[i] - fruit.center[i]) >= 0.0 { c[i] + h } else { c[i] - h };
                }
                if fruit.implicit(&near) <= 0.0 && fruit.implicit(&far) >= 0.0 {
                    out.push(k);
                }
            }
        }
    }
    out
}

pub fn ground_truth(scenario: &Scenario, grid: &VoxelGrid) -> GroundTruth {
    GroundTruth {
        fruits: scenario
            .fruits
            .iter()
            .map(|f| FruitTruth {
                segment: f.segment,
                surface: surface_voxels(f, grid),
                volume: f.volume(),
                centroid: f.center,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lone_fruit(radii: Vec3) -> Scenario {
        Scenario {
            name: "one".into(),
            seed: 0,
            resolution: 0.01,
            bounds: Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)),
            segments: vec![SegmentGeometry {
                index: 0,
                workspace: Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)),
                start_position: Vec3::new(0.5, 0.8, 0.5),
                start_direction: -Vec3::y(),
            }],
            fruits: vec![Fruit { center: Vec3::repeat(0.5), radii, segment: 0 }],
            occluders: vec![],
            placement_failures: 0,
        }
    }

    #[test]
    fn ellipsoid_volume() {
        let f = Fruit { center: Vec3::zeros(), radii: Vec3::new(0.04, 0.04, 0.05), segment: 0 };
        assert!((f.volume() - 3.351e-4).abs() < 1e-7);
    }

    #[test]
    fn no_occluders_without_density() {
        let s = generate_scenario(&ScenarioSpec { segments: 2, occlusion_density: 0.0, ..Default::default() }).unwrap();
        assert!(s.occluders.is_empty());
        assert_eq!(s.fruits.len() + s.placement_failures, 8);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = ScenarioSpec { segments: 3, seed: 9, ..Default::default() };
        assert_eq!(generate_scenario(&spec).unwrap(), generate_scenario(&spec).unwrap());
        assert!(generate_scenario(&ScenarioSpec { fruits_per_segment: 0, ..spec }).is_err());
    }

    #[test]
    fn fruits_do_not_overlap() {
        let s = generate_scenario(&ScenarioSpec { segments: 4, fruits_per_segment: 6, seed: 3, ..Default::default() })
            .unwrap();
        for (i, a) in s.fruits.iter().enumerate() {
            assert!(s.bounds.contains(&a.center));
            for b in &s.fruits[i + 1..] {
                assert!((a.center - b.center).norm() > a.radii.max() + b.radii.max());
            }
        }
    }

    #[test]
    fn center_ray_hits_front_of_fruit() {
        let s = lone_fruit(Vec3::new(0.03, 0.04, 0.035));
        let origin = Vec3::new(0.5, 0.8, 0.5);
        let (t, label) = s.cast_ray(&origin, &-Vec3::y(), 0.6).unwrap();
        assert_eq!(label, PointLabel::Fruit);
        assert!((t - (0.3 - 0.04)).abs() < 1e-12);
    }

    #[test]
    fn empty_view_renders_nothing() {
        let s = lone_fruit(Vec3::repeat(0.03));
        let pose = ViewPose { position: Vec3::new(0.5, 0.8, 0.5), direction: Vec3::y(), target: None };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(render_depth(&s, &pose, &CameraModel::default(), 0.0, &mut rng).is_empty());
    }

    #[test]
    fn surface_voxels_hug_the_shell() {
        let s = lone_fruit(Vec3::new(0.03, 0.035, 0.04));
        let grid = s.empty_grid().unwrap();
        let surf = surface_voxels(&s.fruits[0], &grid);
        assert!(!surf.is_empty());
        let diag = 0.5 * 3f64.sqrt() * grid.resolution();
        for k in &surf {
            let c = grid.center(k);
            // Radial distance of the voxel center from the shell.
            let f = &s.fruits[0];
            let q = (c - f.center).component_div(&f.radii).norm();
            let shell = f.center + (c - f.center) / q;
            assert!((c - shell).norm() <= diag + 1e-3, "{k:?}");
        }
    }
}
