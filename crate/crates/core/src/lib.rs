//! Deterministic multi-agent navigation through precomputed bridges.
//!
//! The pipeline precomputes, per narrow passage, a *bridge*: a bundle of
//! kinodynamically feasible boundary trajectories that share an entry velocity
//! and jointly bound a collision-free tube through the passage. Any agent that
//! reaches the bridge's start gate with the shared entry velocity crosses by
//! blending the boundary accelerations with fixed convex weights derived from
//! its entry point; no per-step collision checking or replanning happens
//! inside. Entrance buffer zones reshape admissible arrival velocities into
//! the shared entry velocity, reachability regions decide which agents may use
//! which bridge, and a postponement scheduler offsets whole plans in time
//! until no two collide.
//!
//! Everything is deterministic: a scenario plus a seed reproduces results
//! bit for bit.

pub mod consts;
pub mod dynamics;
pub mod error;
pub mod bridge;
pub mod geom;
pub mod reach;
pub mod rrt;
pub mod scenario;
pub mod schedule;
pub mod sim;
pub mod vec;

pub use bridge::{adjust_in_entrance, construct_bridge, Bridge, BridgeConfig, Entrance, Gate};
pub use consts::{EPS_DYN, EPS_GEOM};
pub use dynamics::{
    integrate_step, optimal_connect, travel_time, AgentLimits, State, Trajectory,
};
pub use error::{Error, Result};
pub use geom::{segment_hits_obstacles, Aabb, Bvh, Obstacle, ObstacleSet, TriangulatedStrip};
pub use reach::{assign_bridges, region_contains, Assignment, Direction, ReachRegion};
pub use rrt::RrtConfig;
pub use scenario::{load_scenario, parse_scenario, Loaded, Scenario, ScenarioFile};
pub use schedule::{plans_collide, schedule_all, PairStats, PhaseMarks, PipeCtx, Plan};
pub use sim::{audit, compose_plan, run_scenario, AuditReport, Metrics, SimResult};
pub use vec::{Vec2, Vec3, Vector};
