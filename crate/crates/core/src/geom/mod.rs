//! Geometry layer: bounding boxes, convex distance queries, obstacle sets,
//! a triangle BVH, and the triangulated strips/tubes that bound bridges.
//!
//! All collision predicates reduce to one narrow-phase primitive: the exact
//! distance between two convex point clouds (`convex::hull_distance`). Points,
//! segments, and triangles are clouds of one, two, or three vertices, so the
//! same code serves 2-D and 3-D scenarios and disc/sphere inflation is a
//! single comparison against the distance.

mod aabb;
mod bvh;
pub mod convex;
mod obstacle;
mod strip;

pub use aabb::Aabb;
pub use bvh::Bvh;
pub use convex::{barycentric, hull_distance};
pub use obstacle::{
    ear_clip, point_in_polygon, segment_hits_obstacles, signed_area, Obstacle, ObstacleSet,
};
pub use strip::{interior_obstacle_hit, triangulate_boundaries, TriangulatedStrip};
