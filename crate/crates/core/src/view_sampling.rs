//! Candidate view poses and the motion model that prices moving between them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frontier::{LookAtKind, LookAtVoxel};
use crate::geometry::{angle_between, wrap_angle, Aabb, Vec3};
use crate::world_model::{RaycastOptions, RaycastResult, VoxelGrid, VoxelKey};

/// The look-at voxel a view was sampled for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewTarget {
    pub key: VoxelKey,
    pub kind: LookAtKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewPose {
    pub position: Vec3,
    /// Unit optical axis.
    pub direction: Vec3,
    /// `None` for poses that were not sampled from a look-at voxel, such as
    /// the robot's start pose.
    pub target: Option<ViewTarget>,
}

impl ViewPose {
    pub fn looking_at(position: Vec3, at: Vec3, target: Option<ViewTarget>) -> Self {
        Self { position, direction: (at - position).normalize(), target }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointConfig {
    pub q: Vec<f64>,
}

/// A graph vertex: a pose together with the configuration that reaches it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct View {
    pub pose: ViewPose,
    pub config: JointConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorModel {
    pub min_range: f64,
    pub max_range: f64,
    /// Full cone angle of the field of view, degrees.
    pub fov_deg: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self { min_range: 0.15, max_range: 0.60, fov_deg: 60.0 }
    }
}

impl SensorModel {
    pub fn in_range(&self, d: f64) -> bool {
        d >= self.min_range && d <= self.max_range
    }

    pub fn in_fov(&self, direction: &Vec3, to_target: &Vec3) -> bool {
        angle_between(direction, to_target) <= 0.5 * self.fov_deg.to_radians()
    }
}

pub trait MotionModel: Send + Sync {
    fn ik(&self, pose: &ViewPose) -> Option<JointConfig>;

    /// Camera position and optical axis for a configuration.
    fn fk(&self, config: &JointConfig) -> (Vec3, Vec3);

    fn joint_distance(&self, a: &JointConfig, b: &JointConfig) -> f64;

    /// Whether moving in a straight line through configuration space from
    /// `a` to `b` stays valid and collision-free.
    fn trajectory_valid(&self, a: &JointConfig, b: &JointConfig, grid: &VoxelGrid) -> bool;
}

/// Cartesian gantry carrying a yaw/pitch wrist. `q = (x, y, z, yaw, pitch)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GantryWristModel {
    pub workspace: Aabb,
    /// Per-joint cost weights; angles are scaled to meter-equivalents.
    pub weights: [f64; 5],
}

impl GantryWristModel {
    pub const DEFAULT_WEIGHTS: [f64; 5] = [1.0, 1.0, 1.0, 0.3, 0.3];

    pub fn new(workspace: Aabb) -> Self {
        Self { workspace, weights: Self::DEFAULT_WEIGHTS }
    }

    fn within_limits(&self, q: &[f64]) -> bool {
        q.len() == 5
            && self.workspace.contains(&Vec3::new(q[0], q[1], q[2]))
            && q[4].abs() <= std::f64::consts::FRAC_PI_2 + 1e-12
    }
}

impl MotionModel for GantryWristModel {
    fn ik(&self, pose: &ViewPose) -> Option<JointConfig> {
        let d = pose.direction;
        if !(d.norm() > 0.0) {
            return None;
        }
        let d = d.normalize();
        let yaw = d.y.atan2(d.x);
        let pitch = d.z.clamp(-1.0, 1.0).asin();
        let q = vec![pose.position.x, pose.position.y, pose.position.z, yaw, pitch];
        self.within_limits(&q).then_some(JointConfig { q })
    }

    fn fk(&self, config: &JointConfig) -> (Vec3, Vec3) {
        let q = &config.q;
        let (yaw, pitch) = (q[3], q[4]);
        let dir = Vec3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin());
        (Vec3::new(q[0], q[1], q[2]), dir)
    }

    fn joint_distance(&self, a: &JointConfig, b: &JointConfig) -> f64 {
        let mut sum = 0.0;
        for i in 0..5 {
            let mut d = b.q[i] - a.q[i];
            if i == 3 {
                d = wrap_angle(d);
            }
            let w = self.weights[i] * d;
            sum += w * w;
        }
        sum.sqrt()
    }

    fn trajectory_valid(&self, a: &JointConfig, b: &JointConfig, grid: &VoxelGrid) -> bool {
        if !self.within_limits(&a.q) || !self.within_limits(&b.q) {
            return false;
        }
        let pa = Vec3::new(a.q[0], a.q[1], a.q[2]);
        let pb = Vec3::new(b.q[0], b.q[1], b.q[2]);
        let steps = ((pb - pa).norm() / grid.resolution()).ceil().max(0.0) as usize;
        for s in 0..=steps {
            let t = if steps == 0 { 0.0 } else { s as f64 / steps as f64 };
            if grid.state_at(&(pa + (pb - pa) * t)).is_obstacle() {
                return false;
            }
        }
        true
    }
}

/// Whether two views are redundant: both the optical axes and the
/// configurations are close.
pub fn is_similar(a: &View, b: &View, angle_thresh_deg: f64, joint_thresh: f64, model: &dyn MotionModel) -> bool {
    angle_between(&a.pose.direction, &b.pose.direction).to_degrees() < angle_thresh_deg
        && model.joint_distance(&a.config, &b.config) < joint_thresh
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingParams {
    pub attempts_per_view: usize,
    pub raycast: RaycastOptions,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self { attempts_per_view: 50, raycast: RaycastOptions::default() }
    }
}

/// Samples up to `count` views, cycling through `lookats`. Each accepted
/// pose lies in `workspace`, sits within sensor range of its target, has line
/// of sight to it and admits a collision-free configuration.
#[allow(clippy::too_many_arguments)]
pub fn sample_views(
    grid: &VoxelGrid,
    lookats: &[LookAtVoxel],
    workspace: &Aabb,
    sensor: &SensorModel,
    model: &dyn MotionModel,
    count: usize,
    seed: u64,
    params: &SamplingParams,
) -> Vec<View> {
    if lookats.is_empty() || count == 0 {
        return Vec::new();
    }
    let mut found: Vec<(VoxelKey, usize, View)> = (0..count)
        .into_par_iter()
        .filter_map(|i| {
            let lookat = &lookats[i % lookats.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            sample_one(grid, lookat, workspace, sensor, model, params, &mut rng).map(|v| (lookat.key, i, v))
        })
        .collect();
    found.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    found.into_iter().map(|(_, _, v)| v).collect()
}

fn sample_one<R: Rng>(
    grid: &VoxelGrid,
    lookat: &LookAtVoxel,
    workspace: &Aabb,
    sensor: &SensorModel,
    model: &dyn MotionModel,
    params: &SamplingParams,
    rng: &mut R,
) -> Option<View> {
    let target = lookat.position;
    for _ in 0..params.attempts_per_view {
        let u: [f64; 3] = UnitSphere.sample(rng);
        let u = Vec3::new(u[0], u[1], u[2]);
        let dist = rng.gen_range(sensor.min_range..=sensor.max_range);
        let position = target + u * dist;
        if !workspace.contains(&position) {
            continue;
        }
        let opts = RaycastOptions { max_range: sensor.max_range, ..params.raycast };
        if grid.raycast(&position, &target, &opts) != RaycastResult::Visible {
            continue;
        }
        let pose =
            ViewPose { position, direction: -u, target: Some(ViewTarget { key: lookat.key, kind: lookat.kind }) };
        let Some(config) = model.ik(&pose) else { continue };
        if !model.trajectory_valid(&config, &config, grid) {
            continue;
        }
        return Some(View { pose, config });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world_model::VoxelState;

    fn setup() -> (VoxelGrid, GantryWristModel) {
        let bounds = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0));
        let grid = VoxelGrid::new(0.01, bounds).unwrap();
        (grid, GantryWristModel::new(bounds))
    }

    fn view(model: &GantryWristModel, p: Vec3, dir: Vec3) -> View {
        let pose = ViewPose { position: p, direction: dir.normalize(), target: None };
        View { config: model.ik(&pose).unwrap(), pose }
    }

    #[test]
    fn ik_fk_round_trip() {
        let (_, m) = setup();
        let v = view(&m, Vec3::new(0.3, 0.4, 0.5), Vec3::new(-1.0, 2.0, 0.5));
        let (p, d) = m.fk(&v.config);
        assert!((p - v.pose.position).norm() < 1e-12);
        assert!((d - v.pose.direction).norm() < 1e-12);
        let outside = ViewPose { position: Vec3::repeat(2.0), direction: Vec3::x(), target: None };
        assert!(m.ik(&outside).is_none());
    }

    #[test]
    fn similarity_identity_and_antiparallel() {
        let (_, m) = setup();
        let a = view(&m, Vec3::repeat(0.5), Vec3::x());
        assert!(is_similar(&a, &a, 15.0, 0.2, &m));
        let b = view(&m, Vec3::repeat(0.5), -Vec3::x());
        assert!(!is_similar(&a, &b, 15.0, 0.2, &m));
    }

    #[test]
    fn yaw_wraps_in_distance() {
        let (_, m) = setup();
        let a = JointConfig { q: vec![0.0, 0.0, 0.0, 3.1, 0.0] };
        let b = JointConfig { q: vec![0.0, 0.0, 0.0, -3.1, 0.0] };
        let expect = 0.3 * (std::f64::consts::TAU - 6.2);
        assert!((m.joint_distance(&a, &b) - expect).abs() < 1e-12);
    }

    #[test]
    fn trajectory_blocked_by_wall() {
        let (mut g, m) = setup();
        for y in 0..100 {
            for z in 0..100 {
                g.set_state(VoxelKey::new(50, y, z), VoxelState::Occupied).unwrap();
            }
        }
        let a = view(&m, Vec3::new(0.2, 0.5, 0.5), Vec3::x());
        let b = view(&m, Vec3::new(0.8, 0.5, 0.5), Vec3::x());
        let c = view(&m, Vec3::new(0.2, 0.7, 0.5), Vec3::x());
        assert!(!m.trajectory_valid(&a.config, &b.config, &g));
        assert!(m.trajectory_valid(&a.config, &c.config, &g));
    }

    #[test]
    fn enclosed_lookat_gets_no_views() {
        let (mut g, m) = setup();
        let c = VoxelKey::new(50, 50, 50);
        for d in [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]] {
            g.set_state(c.offset(d), VoxelState::Occupied).unwrap();
        }
        let lookat = LookAtVoxel { key: c, kind: LookAtKind::OccUnk, position: g.center(&c) };
        let views =
            sample_views(&g, &[lookat], &m.workspace, &SensorModel::default(), &m, 20, 4, &SamplingParams::default());
        assert!(views.is_empty());
    }
}
