//! Globally optimized view motion planning.
//!
//! The crate maps a scene into a voxel grid, samples candidate views around
//! informative unknown voxels, links them into a motion graph and selects
//! the cheapest view path that observes every target, closing the loop in a
//! simulated fruit-mapping mission.

pub mod error;
pub mod evaluation;
pub mod frontier;
pub mod geometry;
pub mod graph;
pub mod hull;
pub mod mission;
pub mod optimizer;
pub mod sim_world;
pub mod view_sampling;
pub mod world_model;

pub use error::{Error, Result};
pub use evaluation::{CsvRow, MetricsRow};
pub use frontier::{extract_lookats, ExtractionConfig, LookAtKind, LookAtVoxel};
pub use geometry::{Aabb, Vec3};
pub use graph::{build_coverage, CoverageMatrix, Sparsity, ViewMotionGraph};
pub use mission::{run_mission, MissionConfig, MissionReport, Planner, TargetSelection};
pub use optimizer::{EdgePolicy, PlanProblem, PlanSolution, PlanStatus, SolveOptions};
pub use sim_world::{generate_scenario, GroundTruth, Scenario, ScenarioSpec};
pub use view_sampling::{GantryWristModel, JointConfig, MotionModel, SensorModel, View, ViewPose};
pub use world_model::{PointLabel, RaycastResult, VoxelGrid, VoxelKey, VoxelState};
