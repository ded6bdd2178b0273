//! Forward and backward reachable regions of bridge gates, and the greedy
//! loop that assigns every agent to a bridge.
//!
//! A region answers one question: can an agent at rest travel between a query
//! point and some point of a gate within the horizon `tau`? Under the
//! per-axis budget the rest-to-rest time between two points is the maximum of
//! the decoupled one-axis laws, each strictly increasing in distance, so the
//! query reduces to an exact comparison: Chebyshev distance from the query to
//! the gate set versus the per-axis distance coverable in `tau`. No region
//! geometry is materialised and no anchor discretisation error enters.

use crate::bridge::{construct_bridge, gate_points, Bridge, BridgeConfig};
use crate::dynamics::{axis_reach, AgentLimits};
use crate::error::{Error, Result};
use crate::geom::ObstacleSet;
use crate::vec::Vector;

/// Which way time flows between the gate and the query point. Rest-to-rest
/// travel time is symmetric, so the flag does not change membership; it keeps
/// call sites honest about what they ask.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Points reachable from the gate within the horizon.
    Forward,
    /// Points from which the gate is reachable within the horizon.
    Backward,
}

/// Reachable region of a gate: the gate's corner points (a segment in the
/// plane, a convex ring in space) plus a time horizon.
#[derive(Clone, Debug)]
pub struct ReachRegion<const D: usize> {
    pub anchors: Vec<Vector<D>>,
    pub tau: f64,
    pub direction: Direction,
}

impl<const D: usize> ReachRegion<D> {
    pub fn new(anchors: Vec<Vector<D>>, tau: f64, direction: Direction) -> Result<Self> {
        let need = if D == 3 { 6 } else { 2 };
        if anchors.len() < need {
            return Err(Error::DegenerateGeometry(format!(
                "reach region needs at least {need} gate points, got {}",
                anchors.len()
            )));
        }
        if !(tau > 0.0) {
            return Err(Error::DegenerateGeometry(format!(
                "reach region horizon must be positive, got {tau}"
            )));
        }
        Ok(ReachRegion {
            anchors,
            tau,
            direction,
        })
    }

    /// Region of goals servable by `bridge`: grown from the gate its agents
    /// exit through.
    pub fn forward_of(bridge: &Bridge<D>, tau: f64) -> Result<Self> {
        ReachRegion::new(bridge.end_gate.points.clone(), tau, Direction::Forward)
    }

    /// Region of starts servable by `bridge`: grown from the mouth of its
    /// entrance, where arriving agents must present themselves.
    pub fn backward_of(bridge: &Bridge<D>, tau: f64) -> Result<Self> {
        let e = &bridge.entrance;
        let mouth = gate_points(e.mouth_center(), e.dir, e.halfwidth + e.flare);
        ReachRegion::new(mouth, tau, Direction::Backward)
    }

    pub fn contains(&self, q: Vector<D>, limits: &AgentLimits) -> bool {
        chebyshev_to_gate(q, &self.anchors) < axis_reach(self.tau, limits, D)
    }
}

/// True iff some gate point is within rest-to-rest travel time `region.tau`
/// of `q` (strictly; the horizon itself is excluded).
pub fn region_contains<const D: usize>(
    region: &ReachRegion<D>,
    q: Vector<D>,
    limits: &AgentLimits,
) -> bool {
    region.contains(q, limits)
}

/// Chebyshev (max-axis) distance from `q` to the gate set spanned by the
/// anchor points: a polyline in the plane, a planar convex polygon in space.
fn chebyshev_to_gate<const D: usize>(q: Vector<D>, anchors: &[Vector<D>]) -> f64 {
    if D == 2 {
        let mut best = f64::INFINITY;
        for w in anchors.windows(2) {
            best = best.min(chebyshev_to_segment(q, w[0], w[1]));
        }
        return best;
    }
    chebyshev_to_polygon(q, anchors)
}

/// Exact minimiser of max_i |q_i - p(t)_i| over the segment p(t) = a + t(b-a),
/// t in [0,1]. The objective is convex piecewise-linear in t, so the minimum
/// sits at an endpoint, a per-axis zero, or a crossing of two axis terms;
/// evaluating every clamped candidate is exact.
fn chebyshev_to_segment<const D: usize>(q: Vector<D>, a: Vector<D>, b: Vector<D>) -> f64 {
    let u = a - q;
    let d = b - a;
    let mut cands = vec![0.0, 1.0];
    for i in 0..D {
        if d[i] != 0.0 {
            cands.push(-u[i] / d[i]);
        }
    }
    for i in 0..D {
        for j in (i + 1)..D {
            let den = d[i] - d[j];
            if den != 0.0 {
                cands.push((u[j] - u[i]) / den);
            }
            let den = d[i] + d[j];
            if den != 0.0 {
                cands.push(-(u[i] + u[j]) / den);
            }
        }
    }
    let mut best = f64::INFINITY;
    for t in cands {
        let tc = t.clamp(0.0, 1.0);
        let p = u + d * tc;
        best = best.min(p.norm_max());
    }
    best
}

/// Chebyshev distance from `q` to a planar convex polygon: the smallest cube
/// half-width lambda for which the axis cube around `q` meets the polygon.
/// The overlap predicate is monotone in lambda, so bisection between an
/// axis-projection lower bound and a nearest-vertex upper bound converges to
/// the distance.
fn chebyshev_to_polygon<const D: usize>(q: Vector<D>, verts: &[Vector<D>]) -> f64 {
    let mut lo = 0.0f64;
    for i in 0..D {
        let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in verts {
            mn = mn.min(v[i]);
            mx = mx.max(v[i]);
        }
        lo = lo.max((mn - q[i]).max(q[i] - mx).max(0.0));
    }
    let mut hi = f64::INFINITY;
    for v in verts {
        hi = hi.min((*v - q).norm_max());
    }
    if hi - lo <= 1e-12 * (1.0 + hi) {
        return lo;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if cube_meets_polygon(q, mid, verts) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Separating-axis overlap test between the axis cube of half-width `half`
/// around `q` and a planar convex polygon. Candidate axes: the cube face
/// normals, the polygon normal, and every edge-axis cross product.
fn cube_meets_polygon<const D: usize>(q: Vector<D>, half: f64, verts: &[Vector<D>]) -> bool {
    debug_assert_eq!(D, 3);
    let n = verts.len();
    let mut axes: Vec<Vector<D>> = Vec::with_capacity(4 + 3 * n);
    for i in 0..D {
        let mut e = Vector::ZERO;
        e[i] = 1.0;
        axes.push(e);
    }
    let normal = cross_idx(verts[1] - verts[0], verts[2] - verts[0]);
    axes.push(normal);
    for j in 0..n {
        let edge = verts[(j + 1) % n] - verts[j];
        for i in 0..D {
            let mut e = Vector::ZERO;
            e[i] = 1.0;
            axes.push(cross_idx(edge, e));
        }
    }
    let scale = verts.iter().fold(0.0f64, |m, v| m.max(v.dist(q)));
    for axis in axes {
        let len = axis.norm();
        if len <= 1e-14 * (1.0 + scale) {
            continue;
        }
        let centre = q.dot(axis);
        let radius = half * (0..D).map(|i| axis[i].abs()).sum::<f64>();
        let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in verts {
            let s = v.dot(axis);
            mn = mn.min(s);
            mx = mx.max(s);
        }
        if centre + radius < mn || centre - radius > mx {
            return false;
        }
    }
    true
}

fn cross_idx<const D: usize>(a: Vector<D>, b: Vector<D>) -> Vector<D> {
    let mut c = Vector::ZERO;
    c[0] = a[1] * b[2] - a[2] * b[1];
    c[1] = a[2] * b[0] - a[0] * b[2];
    c[2] = a[0] * b[1] - a[1] * b[0];
    c
}

/// Map from agent index to the bridge the agent is routed through.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    pub bridge_of: Vec<usize>,
}

/// Per-bridge RNG stream: decorrelates bridge constructions without storing
/// planner state between them. Shared by the initial assignment pass and the
/// composition-failure fallback so bridge k is identical no matter which
/// pass created it.
pub fn bridge_seed(seed: u64, id: usize) -> u64 {
    seed ^ (id as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Greedy covering: repeatedly take the lowest-index unassigned agent, build
/// a bridge between its start and goal, and hand that bridge to every still
/// unassigned agent whose start lies in the bridge's backward region and
/// whose goal lies in its forward region. Builds at most one bridge per
/// agent; deterministic for a fixed seed.
#[allow(clippy::too_many_arguments)]
pub fn assign_bridges<const D: usize>(
    agents: &[(Vector<D>, Vector<D>)],
    obstacles: &ObstacleSet<D>,
    bounds: (Vector<D>, Vector<D>),
    limits: &AgentLimits,
    tau: f64,
    cfg: &BridgeConfig,
    dt: f64,
    seed: u64,
) -> Result<(Assignment, Vec<Bridge<D>>)> {
    if agents.is_empty() {
        return Err(Error::InvalidScenario("no agents to assign".into()));
    }
    let mut bridge_of = vec![usize::MAX; agents.len()];
    let mut bridges: Vec<Bridge<D>> = Vec::new();
    while let Some(i) = bridge_of.iter().position(|b| *b == usize::MAX) {
        let (start, goal) = agents[i];
        let id = bridges.len();
        let sub = bridge_seed(seed, id);
        let bridge = construct_bridge(id, start, goal, obstacles, bounds, limits, cfg, dt, sub)?;
        let back = ReachRegion::backward_of(&bridge, tau)?;
        let fwd = ReachRegion::forward_of(&bridge, tau)?;
        for (j, (s, g)) in agents.iter().enumerate() {
            if bridge_of[j] == usize::MAX
                && back.contains(*s, limits)
                && fwd.contains(*g, limits)
            {
                bridge_of[j] = id;
            }
        }
        if bridge_of[i] == usize::MAX {
            return Err(Error::InvalidScenario(format!(
                "agent {i}: horizon tau={tau} does not span its own bridge's \
                 entrance and exit; raise tau"
            )));
        }
        bridges.push(bridge);
    }
    Ok((Assignment { bridge_of }, bridges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::travel_time;
    use crate::vec::{Vec2, Vec3};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn limits() -> AgentLimits {
        AgentLimits {
            radius: 1.0,
            v_max: 2.0,
            a_max: 1.0,
        }
    }

    #[test]
    fn region_construction_is_validated() {
        let seg = vec![Vec2::new2(0.0, -1.0), Vec2::new2(0.0, 1.0)];
        assert!(ReachRegion::new(seg.clone(), 1.0, Direction::Forward).is_ok());
        assert!(ReachRegion::new(seg.clone(), 0.0, Direction::Forward).is_err());
        assert!(ReachRegion::new(seg, -1.0, Direction::Forward).is_err());
        assert!(ReachRegion::new(vec![Vec2::new2(0.0, 0.0)], 1.0, Direction::Forward).is_err());
        let ring: Vec<Vec3> = gate_points(Vec3::new3(0.0, 0.0, 0.0), Vec3::new3(1.0, 0.0, 0.0), 2.0);
        assert!(ReachRegion::new(ring[..5].to_vec(), 1.0, Direction::Backward).is_err());
        assert!(ReachRegion::new(ring, 1.0, Direction::Backward).is_ok());
    }

    #[test]
    fn anchor_points_are_contained_for_any_horizon() {
        let lim = limits();
        let seg = vec![Vec2::new2(3.0, -1.0), Vec2::new2(3.0, 5.0)];
        let region = ReachRegion::new(seg.clone(), 1e-6, Direction::Forward).unwrap();
        assert!(region.contains(seg[0], &lim));
        assert!(region.contains(seg[1], &lim));
        assert!(region.contains(Vec2::new2(3.0, 2.0), &lim));

        let ring = gate_points(Vec3::new3(1.0, 2.0, 3.0), Vec3::new3(0.0, 1.0, 0.0), 1.5);
        let region = ReachRegion::new(ring.clone(), 1e-6, Direction::Backward).unwrap();
        for v in &ring {
            assert!(region.contains(*v, &lim));
        }
        assert!(region.contains(Vec3::new3(1.0, 2.0, 3.0), &lim));
    }

    #[test]
    fn exact_horizon_distance_is_excluded() {
        // A query placed exactly axis_reach(tau) off the gate midpoint has
        // Chebyshev distance equal to the reach bitwise (the candidate at the
        // segment midpoint reproduces the offset verbatim), so the strict
        // inequality must exclude it.
        let lim = AgentLimits {
            radius: 1.0,
            v_max: 2.0,
            a_max: 2.0,
        };
        let tau = 2.0;
        let d = axis_reach(tau, &lim, 2);
        assert!(d > 1.4 && d < 1.5);
        let seg = vec![Vec2::new2(0.0, -1.0), Vec2::new2(0.0, 1.0)];
        let region = ReachRegion::new(seg, tau, Direction::Forward).unwrap();
        assert!(!region.contains(Vec2::new2(d, 0.0), &lim));
        assert!(region.contains(Vec2::new2(d - 1e-9, 0.0), &lim));
    }

    #[test]
    fn membership_is_monotone_in_the_horizon() {
        let lim = limits();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let seg = vec![Vec2::new2(-2.0, 1.0), Vec2::new2(4.0, 3.0)];
        for _ in 0..200 {
            let q = Vec2::new2(rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0));
            let t1 = rng.gen_range(0.1..6.0);
            let t2 = t1 + rng.gen_range(0.0..4.0);
            let r1 = ReachRegion::new(seg.clone(), t1, Direction::Forward).unwrap();
            let r2 = ReachRegion::new(seg.clone(), t2, Direction::Forward).unwrap();
            if r1.contains(q, &lim) {
                assert!(r2.contains(q, &lim), "membership lost when tau grew");
            }
        }
    }

    #[test]
    fn membership_matches_dense_gate_sampling() {
        let lim = limits();
        let tau = 3.0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);

        let a = Vec2::new2(-1.0, 2.0);
        let b = Vec2::new2(3.0, -2.5);
        let region = ReachRegion::new(vec![a, b], tau, Direction::Forward).unwrap();
        let mut checked = 0;
        for _ in 0..400 {
            let q = Vec2::new2(rng.gen_range(-8.0..10.0), rng.gen_range(-9.0..9.0));
            let mut min_t = f64::INFINITY;
            for k in 0..=2000 {
                let s = a.lerp(b, k as f64 / 2000.0);
                min_t = min_t.min(travel_time(s, q, &lim));
            }
            if (min_t - tau).abs() < 5e-3 {
                continue;
            }
            checked += 1;
            assert_eq!(
                region.contains(q, &lim),
                min_t < tau,
                "query {:?}: oracle min time {min_t}",
                q.0
            );
        }
        assert!(checked > 300);

        let ring = gate_points(Vec3::new3(2.0, 1.0, -1.0), Vec3::new3(0.6, 0.48, 0.64), 2.0);
        let region = ReachRegion::new(ring.clone(), tau, Direction::Backward).unwrap();
        let mut checked = 0;
        for _ in 0..150 {
            let q = Vec3::new3(
                rng.gen_range(-6.0..9.0),
                rng.gen_range(-6.0..8.0),
                rng.gen_range(-7.0..6.0),
            );
            let mut min_t = f64::INFINITY;
            for j in 1..ring.len() - 1 {
                let (v0, v1, v2) = (ring[0], ring[j], ring[j + 1]);
                for bi in 0..=40 {
                    for bj in 0..=(40 - bi) {
                        let (u, w) = (bi as f64 / 40.0, bj as f64 / 40.0);
                        let s = v0 * (1.0 - u - w) + v1 * u + v2 * w;
                        min_t = min_t.min(travel_time(s, q, &lim));
                    }
                }
            }
            if (min_t - tau).abs() < 5e-2 {
                continue;
            }
            checked += 1;
            assert_eq!(
                region.contains(q, &lim),
                min_t < tau,
                "query {:?}: oracle min time {min_t}",
                q.0
            );
        }
        assert!(checked > 100);
    }

    #[test]
    fn single_agent_gets_one_bridge() {
        let lim = limits();
        let cfg = BridgeConfig::for_limits(&lim, 2);
        let agents = vec![(Vec2::new2(6.0, 10.0), Vec2::new2(34.0, 10.0))];
        let bounds = (Vec2::new2(0.0, 0.0), Vec2::new2(40.0, 20.0));
        let tau = 40.0;
        let run = || {
            assign_bridges(
                &agents,
                &ObstacleSet::default(),
                bounds,
                &lim,
                tau,
                &cfg,
                0.05,
                9,
            )
            .unwrap()
        };
        let (asg, bridges) = run();
        assert_eq!(bridges.len(), 1);
        assert_eq!(asg.bridge_of, vec![0]);

        let back = ReachRegion::backward_of(&bridges[0], tau).unwrap();
        let fwd = ReachRegion::forward_of(&bridges[0], tau).unwrap();
        assert!(back.contains(agents[0].0, &lim));
        assert!(fwd.contains(agents[0].1, &lim));

        let (asg2, bridges2) = run();
        assert_eq!(asg, asg2);
        assert_eq!(bridges[0].boundaries[0].last().p, bridges2[0].boundaries[0].last().p);
    }

    #[test]
    fn distant_goal_forces_a_second_bridge() {
        let lim = limits();
        let cfg = BridgeConfig::for_limits(&lim, 2);
        let agents = vec![
            (Vec2::new2(6.0, 15.0), Vec2::new2(45.0, 15.0)),
            (Vec2::new2(7.0, 17.0), Vec2::new2(95.0, 15.0)),
        ];
        let bounds = (Vec2::new2(0.0, 0.0), Vec2::new2(100.0, 30.0));
        let tau = 20.0;
        let (asg, bridges) = assign_bridges(
            &agents,
            &ObstacleSet::default(),
            bounds,
            &lim,
            tau,
            &cfg,
            0.05,
            2,
        )
        .unwrap();
        assert_eq!(bridges.len(), 2);
        assert_eq!(asg.bridge_of, vec![0, 1]);
        for (j, (s, g)) in agents.iter().enumerate() {
            let b = &bridges[asg.bridge_of[j]];
            assert!(ReachRegion::backward_of(b, tau).unwrap().contains(*s, &lim));
            assert!(ReachRegion::forward_of(b, tau).unwrap().contains(*g, &lim));
        }
    }

    #[test]
    fn separated_groups_get_separate_bridges() {
        let lim = limits();
        let cfg = BridgeConfig::for_limits(&lim, 2);
        // Two mirrored clusters; the horizon is chosen so each cluster sees
        // its own lane's gates but not the other lane's, 30 units away.
        let mut agents = Vec::new();
        for k in 0..3 {
            let dy = k as f64 * 1.5;
            agents.push((Vec2::new2(5.0, 8.0 + dy), Vec2::new2(55.0, 8.0 + dy)));
        }
        for k in 0..3 {
            let dy = k as f64 * 1.5;
            agents.push((Vec2::new2(5.0, 38.0 + dy), Vec2::new2(55.0, 38.0 + dy)));
        }
        let bounds = (Vec2::new2(0.0, 0.0), Vec2::new2(60.0, 50.0));
        let tau = 12.0;
        let (asg, bridges) = assign_bridges(
            &agents,
            &ObstacleSet::default(),
            bounds,
            &lim,
            tau,
            &cfg,
            0.05,
            4,
        )
        .unwrap();
        assert_eq!(bridges.len(), 2);
        assert_eq!(asg.bridge_of, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn empty_agent_list_is_rejected() {
        let lim = limits();
        let cfg = BridgeConfig::for_limits(&lim, 2);
        let bounds = (Vec2::new2(0.0, 0.0), Vec2::new2(10.0, 10.0));
        let err = assign_bridges::<2>(
            &[],
            &ObstacleSet::default(),
            bounds,
            &lim,
            5.0,
            &cfg,
            0.05,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidScenario(_)));
    }

    #[test]
    fn insufficient_horizon_is_reported() {
        let lim = limits();
        let cfg = BridgeConfig::for_limits(&lim, 2);
        let agents = vec![(Vec2::new2(5.0, 10.0), Vec2::new2(35.0, 10.0))];
        let bounds = (Vec2::new2(0.0, 0.0), Vec2::new2(40.0, 20.0));
        let err = assign_bridges(
            &agents,
            &ObstacleSet::default(),
            bounds,
            &lim,
            0.5,
            &cfg,
            0.05,
            9,
        )
        .unwrap_err();
        match err {
            Error::InvalidScenario(msg) => assert!(msg.contains("tau")),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
