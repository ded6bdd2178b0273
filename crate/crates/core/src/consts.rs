//! Numeric tolerances shared across the crate.

/// Absolute tolerance for geometric predicates: containment slack, junction
/// continuity between composed trajectory phases, collision-distance slack.
pub const EPS_GEOM: f64 = 1e-9;

/// Relative tolerance on dynamic limits. Velocity and acceleration norms may
/// exceed their bound by at most `limit * EPS_DYN`; this absorbs the rounding
/// of reconstructing velocities from stored accelerations.
pub const EPS_DYN: f64 = 1e-6;
