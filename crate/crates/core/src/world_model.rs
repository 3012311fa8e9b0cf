//! Sparse voxel occupancy map.
//!
//! Cells keep raw hit/miss counters and derive their state from them, so the
//! same observation history always yields the same map. Ray traversal is an
//! integer line walk over the voxel lattice, stepping one axis at a time.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};

/// Integer voxel index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VoxelKey(pub [i32; 3]);

impl VoxelKey {
    pub fn new(x: i32, y: i32, z: i32) -> Self {
        Self([x, y, z])
    }

    pub fn offset(&self, d: [i32; 3]) -> Self {
        Self([self.0[0] + d[0], self.0[1] + d[1], self.0[2] + d[2]])
    }

    /// Face-adjacent neighbors, ordered -x, +x, -y, +y, -z, +z.
    pub fn neighbors6(&self) -> [VoxelKey; 6] {
        [
            self.offset([-1, 0, 0]),
            self.offset([1, 0, 0]),
            self.offset([0, -1, 0]),
            self.offset([0, 1, 0]),
            self.offset([0, 0, -1]),
            self.offset([0, 0, 1]),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoxelState {
    Unknown,
    Free,
    Occupied,
    Roi,
}

impl VoxelState {
    pub fn is_obstacle(self) -> bool {
        matches!(self, VoxelState::Occupied | VoxelState::Roi)
    }

    fn as_str(self) -> &'static str {
        match self {
            VoxelState::Unknown => "unknown",
            VoxelState::Free => "free",
            VoxelState::Occupied => "occupied",
            VoxelState::Roi => "roi",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "unknown" => VoxelState::Unknown,
            "free" => VoxelState::Free,
            "occupied" => VoxelState::Occupied,
            "roi" => VoxelState::Roi,
            _ => return None,
        })
    }
}

/// Semantic label attached to a sensed point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointLabel {
    Plant,
    Fruit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRecord {
    pub hits: u32,
    pub misses: u32,
    pub roi_hits: u32,
}

impl CellRecord {
    /// Count-threshold state rule.
    pub fn state(&self) -> VoxelState {
        if self.roi_hits >= 1 && 2 * u64::from(self.roi_hits) >= u64::from(self.hits) {
            VoxelState::Roi
        } else if self.hits > self.misses {
            VoxelState::Occupied
        } else if self.misses > 0 {
            VoxelState::Free
        } else {
            VoxelState::Unknown
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "result", content = "key")]
pub enum RaycastResult {
    Visible,
    Blocked(VoxelKey),
    OutOfRange,
}

/// Options for visibility queries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RaycastOptions {
    pub max_range: f64,
    /// Treat unexplored voxels as opaque.
    pub unknown_blocks: bool,
}

impl Default for RaycastOptions {
    fn default() -> Self {
        Self { max_range: f64::MAX, unknown_blocks: false }
    }
}

/// Voxels visited by a segment, in traversal order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Traversal {
    pub keys: Vec<VoxelKey>,
    /// False when the segment end lies outside the grid and the walk was clipped.
    pub reached_end: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VoxelGrid {
    resolution: f64,
    bounds: Aabb,
    dims: [i32; 3],
    #[serde(skip)]
    cells: HashMap<VoxelKey, CellRecord>,
}

/// JSON header of the text snapshot format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub resolution: f64,
    pub bounds: Aabb,
    pub dims: [i32; 3],
    pub cells: usize,
}

impl VoxelGrid {
    pub const DEFAULT_RESOLUTION: f64 = 0.01;

    /// Creates an all-unknown grid. The upper bound is snapped outward to a
    /// whole number of voxels.
    pub fn new(resolution: f64, bounds: Aabb) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidInput(format!("resolution must be positive, got {resolution}")));
        }
        let ext = bounds.extent();
        if (0..3).any(|i| !(ext[i] > 0.0)) {
            return Err(Error::InvalidInput("bounds must have positive extent".into()));
        }
        let mut dims = [0i32; 3];
        for i in 0..3 {
            dims[i] = ((ext[i] / resolution) - 1e-9).ceil().max(1.0) as i32;
        }
        let max = bounds.min + Vec3::new(dims[0] as f64, dims[1] as f64, dims[2] as f64) * resolution;
        Ok(Self { resolution, bounds: Aabb::new(bounds.min, max), dims, cells: HashMap::new() })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn dims(&self) -> [i32; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn in_bounds(&self, key: &VoxelKey) -> bool {
        (0..3).all(|i| key.0[i] >= 0 && key.0[i] < self.dims[i])
    }

    /// Key of the voxel containing `p`, or `None` outside the grid.
    pub fn key_of(&self, p: &Vec3) -> Option<VoxelKey> {
        if !self.bounds.contains(p) {
            return None;
        }
        let mut k = [0i32; 3];
        for i in 0..3 {
            let f = ((p[i] - self.bounds.min[i]) / self.resolution).floor() as i32;
            k[i] = f.clamp(0, self.dims[i] - 1);
        }
        Some(VoxelKey(k))
    }

    pub fn center(&self, key: &VoxelKey) -> Vec3 {
        self.bounds.min
            + Vec3::new(key.0[0] as f64 + 0.5, key.0[1] as f64 + 0.5, key.0[2] as f64 + 0.5) * self.resolution
    }

    pub fn state(&self, key: &VoxelKey) -> VoxelState {
        self.cells.get(key).map_or(VoxelState::Unknown, CellRecord::state)
    }

    pub fn state_at(&self, p: &Vec3) -> VoxelState {
        self.key_of(p).map_or(VoxelState::Unknown, |k| self.state(&k))
    }

    pub fn record(&self, key: &VoxelKey) -> Option<&CellRecord> {
        self.cells.get(key)
    }

    /// Known cells sorted by key.
    pub fn known_cells(&self) -> Vec<(VoxelKey, VoxelState)> {
        let mut out: Vec<_> =
            self.cells.iter().map(|(k, c)| (*k, c.state())).filter(|(_, s)| *s != VoxelState::Unknown).collect();
        out.sort_unstable_by_key(|(k, _)| *k);
        out
    }

    pub fn keys_in_state(&self, state: VoxelState) -> Vec<VoxelKey> {
        let mut out: Vec<_> = self.cells.iter().filter(|(_, c)| c.state() == state).map(|(k, _)| *k).collect();
        out.sort_unstable();
        out
    }

    pub fn count_state(&self, state: VoxelState) -> usize {
        self.cells.values().filter(|c| c.state() == state).count()
    }

    /// Directly overwrite the counters of a cell. Used to seed test maps.
    pub fn set_record(&mut self, key: VoxelKey, record: CellRecord) -> Result<()> {
        if !self.in_bounds(&key) {
            return Err(Error::InvalidInput(format!("key {:?} outside grid", key.0)));
        }
        if record == CellRecord::default() {
            self.cells.remove(&key);
        } else {
            self.cells.insert(key, record);
        }
        Ok(())
    }

    /// Sets a cell to a canonical record producing `state`.
    pub fn set_state(&mut self, key: VoxelKey, state: VoxelState) -> Result<()> {
        let record = match state {
            VoxelState::Unknown => CellRecord::default(),
            VoxelState::Free => CellRecord { hits: 0, misses: 1, roi_hits: 0 },
            VoxelState::Occupied => CellRecord { hits: 1, misses: 0, roi_hits: 0 },
            VoxelState::Roi => CellRecord { hits: 1, misses: 0, roi_hits: 1 },
        };
        self.set_record(key, record)
    }

    /// Walks the voxels crossed by segment `from -> to`, clipped to the grid.
    pub fn traverse(&self, from: &Vec3, to: &Vec3) -> Traversal {
        let d = to - from;
        let (t_in, t_out) = match self.bounds.ray_interval(from, &d) {
            Some(iv) => iv,
            None => return Traversal::default(),
        };
        let ts = t_in.max(0.0);
        let te = t_out.min(1.0);
        if ts > te {
            return Traversal::default();
        }
        let reached_end = t_out >= 1.0;
        let inv_res = 1.0 / self.resolution;
        let s = (from + d * ts - self.bounds.min) * inv_res;
        let e = (from + d * te - self.bounds.min) * inv_res;
        let clamp = |v: f64, i: usize| (v.floor() as i32).clamp(0, self.dims[i] - 1);
        let mut cur = [clamp(s[0], 0), clamp(s[1], 1), clamp(s[2], 2)];
        let end = [clamp(e[0], 0), clamp(e[1], 1), clamp(e[2], 2)];
        let dv = e - s;

        let mut step = [0i32; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for i in 0..3 {
            if end[i] == cur[i] {
                continue;
            }
            step[i] = if end[i] > cur[i] { 1 } else { -1 };
            if dv[i].abs() > 0.0 {
                let boundary = if step[i] > 0 { f64::from(cur[i] + 1) } else { f64::from(cur[i]) };
                t_max[i] = (boundary - s[i]) / dv[i];
                t_delta[i] = 1.0 / dv[i].abs();
            } else {
                t_max[i] = 0.0;
                t_delta[i] = 0.0;
            }
        }

        let manhattan: i32 = (0..3).map(|i| (end[i] - cur[i]).abs()).sum();
        let mut keys = Vec::with_capacity(manhattan as usize + 1);
        loop {
            keys.push(VoxelKey(cur));
            if cur == end {
                break;
            }
            let mut axis = usize::MAX;
            let mut best = f64::INFINITY;
            for i in 0..3 {
                if cur[i] != end[i] && (axis == usize::MAX || t_max[i] < best) {
                    axis = i;
                    best = t_max[i];
                }
            }
            cur[axis] += step[axis];
            t_max[axis] += t_delta[axis];
        }
        Traversal { keys, reached_end }
    }

    /// Fuses one sensor frame: misses along each ray, a hit at its end point.
    pub fn integrate_observation(&mut self, origin: &Vec3, hits: &[(Vec3, PointLabel)]) {
        for (point, label) in hits {
            let walk = self.traverse(origin, point);
            if walk.keys.is_empty() {
                continue;
            }
            let free_len = if walk.reached_end { walk.keys.len() - 1 } else { walk.keys.len() };
            for key in &walk.keys[..free_len] {
                self.cells.entry(*key).or_default().misses += 1;
            }
            if walk.reached_end {
                let cell = self.cells.entry(*walk.keys.last().unwrap()).or_default();
                cell.hits += 1;
                if *label == PointLabel::Fruit {
                    cell.roi_hits += 1;
                }
            }
        }
    }

    /// Line-of-sight query between `origin` and the voxel containing `target`.
    /// The end voxels themselves never block.
    pub fn raycast(&self, origin: &Vec3, target: &Vec3, opts: &RaycastOptions) -> RaycastResult {
        let dist = (target - origin).norm();
        if dist == 0.0 {
            return RaycastResult::Visible;
        }
        if dist > opts.max_range {
            return RaycastResult::OutOfRange;
        }
        let walk = self.traverse(origin, target);
        if walk.keys.len() <= 1 {
            return RaycastResult::Visible;
        }
        let last = if walk.reached_end { walk.keys.len() - 1 } else { walk.keys.len() };
        for key in &walk.keys[1..last.max(1)] {
            let s = self.state(key);
            if s.is_obstacle() || (opts.unknown_blocks && s == VoxelState::Unknown) {
                return RaycastResult::Blocked(*key);
            }
        }
        RaycastResult::Visible
    }

    /// Coarse (double voxel size) cells within `radius` of any ROI voxel
    /// center whose children are all unknown.
    pub fn inflate_roi(&self, radius: f64) -> BTreeSet<VoxelKey> {
        let mut out = BTreeSet::new();
        let roi = self.keys_in_state(VoxelState::Roi);
        if roi.is_empty() {
            return out;
        }
        let coarse = 2.0 * self.resolution;
        let cdims = self.coarse_dims();
        let mut tested: HashSet<VoxelKey> = HashSet::new();
        for key in &roi {
            let c = self.center(key);
            let mut lo = [0i32; 3];
            let mut hi = [0i32; 3];
            for i in 0..3 {
                lo[i] = (((c[i] - radius - self.bounds.min[i]) / coarse).floor() as i32).max(0);
                hi[i] = (((c[i] + radius - self.bounds.min[i]) / coarse).floor() as i32).min(cdims[i] - 1);
            }
            for x in lo[0]..=hi[0] {
                for y in lo[1]..=hi[1] {
                    for z in lo[2]..=hi[2] {
                        let ck = VoxelKey::new(x, y, z);
                        if out.contains(&ck) {
                            continue;
                        }
                        if (self.coarse_center(&ck) - c).norm() > radius {
                            continue;
                        }
                        if tested.insert(ck) && self.coarse_all_unknown(&ck) {
                            out.insert(ck);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn coarse_dims(&self) -> [i32; 3] {
        [(self.dims[0] + 1) / 2, (self.dims[1] + 1) / 2, (self.dims[2] + 1) / 2]
    }

    pub fn coarse_center(&self, ck: &VoxelKey) -> Vec3 {
        self.bounds.min
            + Vec3::new(f64::from(ck.0[0]) + 0.5, f64::from(ck.0[1]) + 0.5, f64::from(ck.0[2]) + 0.5)
                * (2.0 * self.resolution)
    }

    /// In-bounds fine voxels covered by a coarse cell.
    pub fn coarse_children(&self, ck: &VoxelKey) -> Vec<VoxelKey> {
        let mut out = Vec::with_capacity(8);
        for dx in 0..2 {
            for dy in 0..2 {
                for dz in 0..2 {
                    let k = VoxelKey::new(2 * ck.0[0] + dx, 2 * ck.0[1] + dy, 2 * ck.0[2] + dz);
                    if self.in_bounds(&k) {
                        out.push(k);
                    }
                }
            }
        }
        out
    }

    pub fn coarse_all_unknown(&self, ck: &VoxelKey) -> bool {
        self.coarse_children(ck).iter().all(|k| self.state(k) == VoxelState::Unknown)
    }

    /// Text snapshot: one JSON header line, then `x y z state` per known voxel,
    /// sorted by key.
    pub fn to_snapshot(&self) -> String {
        let cells = self.known_cells();
        let header =
            SnapshotHeader { resolution: self.resolution, bounds: self.bounds, dims: self.dims, cells: cells.len() };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for (k, s) in cells {
            let _ = writeln!(out, "{} {} {} {}", k.0[0], k.0[1], k.0[2], s.as_str());
        }
        out
    }

    /// Rebuilds a grid from [`VoxelGrid::to_snapshot`] output. Counters are
    /// canonicalized; states are preserved.
    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: SnapshotHeader =
            serde_json::from_str(lines.next().ok_or_else(|| Error::Parse("empty snapshot".into()))?)
                .map_err(|e| Error::Parse(format!("snapshot header: {e}")))?;
        let mut grid = VoxelGrid::new(header.resolution, header.bounds)?;
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("snapshot line {}: {line:?}", n + 2));
            if parts.len() != 4 {
                return Err(bad());
            }
            let mut k = [0i32; 3];
            for i in 0..3 {
                k[i] = parts[i].parse().map_err(|_| bad())?;
            }
            let state = VoxelState::parse(parts[3]).ok_or_else(bad)?;
            grid.set_state(VoxelKey(k), state)?;
        }
        Ok(grid)
    }
}

/// Map shared between a planner and an integration step.
///
/// Readers take cheap snapshots; the writer mutates a private copy when a
/// snapshot is still alive, so queries never observe a half-applied frame.
#[derive(Debug)]
pub struct SharedGrid {
    inner: RwLock<Arc<VoxelGrid>>,
}

impl SharedGrid {
    pub fn new(grid: VoxelGrid) -> Self {
        Self { inner: RwLock::new(Arc::new(grid)) }
    }

    pub fn snapshot(&self) -> Arc<VoxelGrid> {
        Arc::clone(&self.inner.read().expect("grid lock poisoned"))
    }

    pub fn integrate(&self, origin: &Vec3, hits: &[(Vec3, PointLabel)]) {
        let current = self.snapshot();
        let mut next = (*current).clone();
        drop(current);
        next.integrate_observation(origin, hits);
        *self.inner.write().expect("grid lock poisoned") = Arc::new(next);
    }

    pub fn into_inner(self) -> VoxelGrid {
        let arc = self.inner.into_inner().expect("grid lock poisoned");
        Arc::try_unwrap(arc).unwrap_or_else(|a| (*a).clone())
    }
}
