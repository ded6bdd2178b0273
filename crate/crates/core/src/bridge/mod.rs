//! Bridges: precomputed families of boundary trajectories through a passage.
//!
//! A bridge between two anchor points holds K boundary trajectories (2 in the
//! plane, 6 in space) that all start on the entry gate with the same entry
//! velocity `v0`, all end at rest on the far side, and all run on the same
//! time grid. Routing an agent through the bridge is then closed form: pick
//! convex weights from where the agent stands on the gate, and blend the
//! boundary accelerations step by step. Because the discrete integrator is
//! linear in (start position, accelerations), the blended positions are the
//! same convex combination of the boundary positions, so the agent provably
//! stays inside the triangulated volume the boundaries span, which was
//! collision-checked once at construction time.

use crate::consts::{EPS_DYN, EPS_GEOM};
use crate::dynamics::{AgentLimits, State, Trajectory};
use crate::error::{Error, Result};
use crate::geom::{interior_obstacle_hit, triangulate_boundaries, ObstacleSet, TriangulatedStrip};
use crate::rrt::{self, RrtConfig};
use crate::vec::Vector;
use serde::{Deserialize, Serialize};

pub mod entrance;
pub use entrance::{adjust_in_entrance, Adjusted, Entrance};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BridgeConfig {
    /// Gate half-width increment per widening round, and therefore the
    /// resolution to which the widest passable gate is found.
    pub widen_step: f64,
    /// Upper bound on the gate half-width. Sharing a gate requires lanes
    /// that clear an agent already resting at the gate center by a full
    /// collision diameter, so the bound must exceed 3 radii; past a few
    /// radii, extra width costs construction time without routing more
    /// agents in practice.
    pub max_halfwidth: f64,
    pub rrt: RrtConfig,
}

impl BridgeConfig {
    pub fn for_limits(limits: &AgentLimits, dim: usize) -> Self {
        BridgeConfig {
            widen_step: 0.5 * limits.radius,
            max_halfwidth: 4.0 * limits.radius,
            rrt: RrtConfig::for_limits(limits, dim),
        }
    }
}

/// A gate: the K entry (or exit) points of a bridge's boundary trajectories.
/// Two points span a segment in the plane; K points span a convex polygon in
/// space, in angular order around the bridge axis.
#[derive(Clone, Debug)]
pub struct Gate<const D: usize> {
    pub points: Vec<Vector<D>>,
    /// Unit normal of the gate, pointing into the bridge.
    pub normal: Vector<D>,
}

impl<const D: usize> Gate<D> {
    pub fn center(&self) -> Vector<D> {
        let mut c = Vector::ZERO;
        for p in &self.points {
            c = c + *p;
        }
        c / self.points.len() as f64
    }

    pub fn halfwidth(&self) -> f64 {
        let c = self.center();
        self.points
            .iter()
            .map(|p| p.dist(c))
            .fold(0.0, f64::max)
    }

    /// Convex weights over the gate points reproducing `entry`, or None when
    /// `entry` is farther than `tol` from the gate. Planar gates use the
    /// segment ratio; spatial gates fan-triangulate around point 0 and use
    /// barycentric coordinates of the containing fan triangle.
    pub fn weights(&self, entry: Vector<D>, tol: f64) -> Option<Vec<f64>> {
        if D == 2 {
            let a = self.points[0];
            let b = self.points[1];
            let ab = b - a;
            let len_sq = ab.norm_sq();
            if len_sq == 0.0 {
                return if entry.dist(a) <= tol {
                    Some(vec![1.0, 0.0])
                } else {
                    None
                };
            }
            let t = (entry - a).dot(ab) / len_sq;
            let tc = t.clamp(0.0, 1.0);
            if entry.dist(a + ab * tc) > tol {
                return None;
            }
            return Some(vec![1.0 - tc, tc]);
        }
        let k = self.points.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for j in 1..k - 1 {
            let tri = [self.points[0], self.points[j], self.points[j + 1]];
            let Ok(l) = crate::geom::barycentric(&tri, entry) else {
                continue;
            };
            let worst = l[0].min(l[1]).min(l[2]);
            let rebuilt = tri[0] * l[0] + tri[1] * l[1] + tri[2] * l[2];
            if rebuilt.dist(entry) > tol {
                continue;
            }
            if best.as_ref().map_or(true, |(bw, _)| worst > *bw) {
                let mut w = vec![0.0; k];
                w[0] = l[0];
                w[j] = l[1];
                w[j + 1] = l[2];
                best = Some((worst, w));
            }
        }
        let span = self.halfwidth().max(tol);
        match best {
            Some((worst, w)) if worst >= -1e-9 - tol / span => Some(w),
            _ => None,
        }
    }

    /// Nearest point of the gate to `p`, pulled inside by `inset` so later
    /// weight queries are strictly interior.
    pub fn clamp_entry(&self, p: Vector<D>, inset: f64) -> Vector<D> {
        let c = self.center();
        if D == 2 {
            let a = self.points[0];
            let b = self.points[1];
            let ab = b - a;
            let len_sq = ab.norm_sq();
            if len_sq == 0.0 {
                return a;
            }
            let lo = inset / len_sq.sqrt();
            let t = ((p - a).dot(ab) / len_sq).clamp(lo, 1.0 - lo);
            return a + ab * t;
        }
        // Project onto the gate plane, then pull radially toward the centre
        // until inside the polygon shrunk by `inset`.
        let q = p - self.normal * (p - c).dot(self.normal);
        let dir = q - c;
        if dir.norm() <= EPS_GEOM {
            return c;
        }
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        let tol = self.halfwidth().max(1.0) * 1e-12;
        if self.weights(q, tol).is_some() && self.edge_clearance(q) >= inset {
            return q;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let cand = c + dir * mid;
            if self.weights(cand, tol).is_some() && self.edge_clearance(cand) >= inset {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        c + dir * lo
    }

    /// Distance from `p` to the nearest polygon edge (spatial gates).
    fn edge_clearance(&self, p: Vector<D>) -> f64 {
        let k = self.points.len();
        let mut d = f64::INFINITY;
        for i in 0..k {
            let a = self.points[i];
            let b = self.points[(i + 1) % k];
            d = d.min(crate::geom::hull_distance(&[a, b], &[p]));
        }
        d
    }
}

#[derive(Clone, Debug)]
pub struct Bridge<const D: usize> {
    pub id: usize,
    /// Shared entry velocity of every boundary trajectory; full speed along
    /// the bridge axis.
    pub v0: Vector<D>,
    pub dt: f64,
    pub boundaries: Vec<Trajectory<D>>,
    /// Triangulated volume spanned by the boundaries; its emptiness is the
    /// collision certificate for every interpolated trajectory.
    pub strip: TriangulatedStrip<D>,
    pub start_gate: Gate<D>,
    pub end_gate: Gate<D>,
    pub halfwidth: f64,
    pub entrance: Entrance<D>,
    /// Set when widening stopped for a reason other than hitting geometry,
    /// so the gate may be narrower than the passage allows.
    pub warning: Option<String>,
}

impl<const D: usize> Bridge<D> {
    pub fn steps(&self) -> usize {
        self.boundaries[0].steps()
    }

    pub fn duration(&self) -> f64 {
        self.boundaries[0].duration()
    }

    /// Tolerance for accepting an entry point as on-gate.
    pub fn gate_tol(&self) -> f64 {
        1e-6 * (2.0 * self.halfwidth).max(1.0)
    }

    /// Route an agent entering at `entry` (on the start gate, carrying `v0`)
    /// through the bridge: blend the boundary accelerations with the convex
    /// weights that reproduce `entry` from the gate points. The result runs
    /// on the bridge grid and ends at rest on the end gate.
    pub fn interpolate(&self, entry: Vector<D>) -> Result<Trajectory<D>> {
        let weights = self
            .start_gate
            .weights(entry, self.gate_tol())
            .ok_or_else(|| Error::OffGate {
                bridge: self.id,
                detail: format!("entry {:?} not on the start gate", entry.0),
            })?;
        let steps = self.steps();
        let mut accels = Vec::with_capacity(steps);
        for i in 0..steps {
            let mut a = Vector::ZERO;
            for (k, w) in weights.iter().enumerate() {
                if *w != 0.0 {
                    a = a + self.boundaries[k].point(i).a * *w;
                }
            }
            accels.push(a);
        }
        Ok(Trajectory::from_accels(
            State::new(entry, self.v0),
            self.dt,
            &accels,
        ))
    }
}

/// Unit directions spanning the plane orthogonal to `dir`: one perpendicular
/// in 2-D, two in 3-D.
pub(crate) fn perp_dirs<const D: usize>(dir: Vector<D>) -> Vec<Vector<D>> {
    if D == 2 {
        let mut u = Vector::ZERO;
        u[0] = -dir[1];
        u[1] = dir[0];
        return vec![u];
    }
    // Cross dir with the axis of its smallest component.
    let mut axis = Vector::ZERO;
    let mut small = 0;
    for i in 1..D {
        if dir[i].abs() < dir[small].abs() {
            small = i;
        }
    }
    axis[small] = 1.0;
    let e1 = cross3(dir, axis).normalized().expect("dir is unit");
    let e2 = cross3(dir, e1);
    vec![e1, e2]
}

fn cross3<const D: usize>(a: Vector<D>, b: Vector<D>) -> Vector<D> {
    let mut c = Vector::ZERO;
    c[0] = a[1] * b[2] - a[2] * b[1];
    c[1] = a[2] * b[0] - a[0] * b[2];
    c[2] = a[0] * b[1] - a[1] * b[0];
    c
}

/// K gate points at half-width `w` around `center`: segment ends in 2-D, a
/// regular hexagon in 3-D.
pub(crate) fn gate_points<const D: usize>(
    center: Vector<D>,
    dir: Vector<D>,
    w: f64,
) -> Vec<Vector<D>> {
    let perps = perp_dirs(dir);
    if D == 2 {
        return vec![center + perps[0] * w, center - perps[0] * w];
    }
    (0..6)
        .map(|k| {
            let ang = k as f64 / 6.0 * std::f64::consts::TAU;
            center + perps[0] * (w * ang.cos()) + perps[1] * (w * ang.sin())
        })
        .collect()
}

/// Align boundary trajectories on a common horizon: verify the shared entry
/// velocity and the rest endings, then pad the shorter ones with rest dwell.
pub fn enforce_boundary_conditions<const D: usize>(
    mut boundaries: Vec<Trajectory<D>>,
    v0: Vector<D>,
) -> Result<Vec<Trajectory<D>>> {
    for (k, b) in boundaries.iter().enumerate() {
        if b.first().v != v0 {
            return Err(Error::JunctionMismatch {
                step: 0,
                detail: format!("boundary {k} does not start with the shared entry velocity"),
            });
        }
        if b.last().v.norm() > EPS_DYN {
            return Err(Error::JunctionMismatch {
                step: b.steps(),
                detail: format!("boundary {k} does not end at rest"),
            });
        }
    }
    let steps = boundaries.iter().map(|b| b.steps()).max().unwrap_or(0);
    for b in &mut boundaries {
        let pad = steps - b.steps();
        b.pad_rest(pad);
    }
    Ok(boundaries)
}

/// Build a bridge between `from` and `to`. Starting from one widening step,
/// the gate grows by `cfg.widen_step` per round; each round plans all K
/// boundary trajectories and collision-checks the spanned volume, and the
/// widest clean round wins. A planner failure beyond the first round keeps
/// the last clean round and records a warning instead of failing.
#[allow(clippy::too_many_arguments)]
pub fn construct_bridge<const D: usize>(
    id: usize,
    from: Vector<D>,
    to: Vector<D>,
    obstacles: &ObstacleSet<D>,
    bounds: (Vector<D>, Vector<D>),
    limits: &AgentLimits,
    cfg: &BridgeConfig,
    dt: f64,
    seed: u64,
) -> Result<Bridge<D>> {
    let dir = (to - from).normalized().ok_or_else(|| {
        Error::DegenerateGeometry("bridge anchor points coincide".into())
    })?;
    let v0 = dir * limits.v_max;

    enum RoundFail {
        Planner(String),
        Geometry(String),
    }

    let round = |w: f64, level: u64| -> std::result::Result<BuiltRound<D>, RoundFail> {
        let starts = gate_points(from, dir, w);
        let goals = gate_points(to, dir, w);
        let mut raw = Vec::with_capacity(starts.len());
        for (k, (s, g)) in starts.iter().zip(&goals).enumerate() {
            let sub = seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(level * 64 + k as u64 + 1);
            match rrt::plan(
                State::new(*s, v0),
                State::at_rest(*g),
                bounds,
                obstacles,
                limits,
                &cfg.rrt,
                dt,
                sub,
            ) {
                Ok(r) => raw.push(r.trajectory),
                // A blocked root measures the passage geometry; exhaustion
                // does not prove anything about it.
                Err(e @ Error::PlannerExhausted { .. }) => {
                    return Err(RoundFail::Planner(format!("boundary {k}: {e}")))
                }
                Err(e) => return Err(RoundFail::Geometry(format!("boundary {k}: {e}"))),
            }
        }
        let boundaries = enforce_boundary_conditions(raw, v0)
            .map_err(|e| RoundFail::Geometry(e.to_string()))?;
        let curves: Vec<Vec<Vector<D>>> = boundaries.iter().map(|b| b.positions()).collect();
        let strip = triangulate_boundaries(&curves)
            .map_err(|e| RoundFail::Geometry(e.to_string()))?;
        if let Some((_, obs)) = strip.collides(obstacles) {
            return Err(RoundFail::Geometry(format!(
                "spanned volume touches obstacle {obs}"
            )));
        }
        if let Some(obs) = interior_obstacle_hit(&strip, obstacles) {
            return Err(RoundFail::Geometry(format!(
                "obstacle {obs} inside the spanned volume"
            )));
        }
        let start_gate = Gate {
            points: starts,
            normal: dir,
        };
        let entrance = Entrance::build(id, &start_gate, dir, w, limits, obstacles)
            .map_err(|e| RoundFail::Geometry(e.to_string()))?;
        Ok(BuiltRound {
            boundaries,
            strip,
            start_gate,
            entrance,
            halfwidth: w,
        })
    };

    let mut best: Option<BuiltRound<D>> = None;
    let mut warning = None;
    let mut level = 0u64;
    let mut first_failure = None;
    loop {
        let w = (level + 1) as f64 * cfg.widen_step;
        if w > cfg.max_halfwidth * (1.0 + 1e-12) {
            break;
        }
        match round(w, level) {
            Ok(b) => best = Some(b),
            Err(RoundFail::Planner(detail)) => {
                if best.is_some() {
                    warning = Some(format!(
                        "widening stopped by planner failure at half-width {w:.3}; \
                         the passage may allow a wider gate ({detail})"
                    ));
                } else {
                    first_failure = Some(detail);
                }
                break;
            }
            Err(RoundFail::Geometry(detail)) => {
                if best.is_none() {
                    first_failure = Some(detail);
                }
                break;
            }
        }
        level += 1;
    }

    let built = best.ok_or_else(|| Error::BridgeFailed {
        from: from.0.to_vec(),
        to: to.0.to_vec(),
        detail: first_failure.unwrap_or_else(|| "no widening round succeeded".into()),
    })?;

    let end_points: Vec<Vector<D>> = built.boundaries.iter().map(|b| b.last().p).collect();
    Ok(Bridge {
        id,
        v0,
        dt,
        strip: built.strip,
        start_gate: built.start_gate,
        end_gate: Gate {
            points: end_points,
            normal: dir,
        },
        halfwidth: built.halfwidth,
        entrance: built.entrance,
        boundaries: built.boundaries,
        warning,
    })
}

struct BuiltRound<const D: usize> {
    boundaries: Vec<Trajectory<D>>,
    strip: TriangulatedStrip<D>,
    start_gate: Gate<D>,
    entrance: Entrance<D>,
    halfwidth: f64,
}
