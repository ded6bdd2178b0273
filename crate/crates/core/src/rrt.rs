//! Kinodynamic RRT over the double integrator. States are (position,
//! velocity) pairs; edges apply one random constant acceleration from the
//! admissible ball for a fixed number of steps, clamping speed by projection
//! onto the `v_max` ball (a contraction, so the adjusted per-step
//! acceleration still respects `a_max`). A node close enough to the goal is
//! finished with an exact two-point connection, so the returned trajectory
//! meets the goal state to floating-point precision rather than within the
//! acceptance tolerance. Nodes too fast for the connector brake straight
//! first, which lets a root moving at full speed finish without sampling
//! whenever the line ahead is clear.
//!
//! Everything is seeded: the same inputs and seed reproduce the tree, and
//! the nearest-neighbour search never iterates a hash map, so results are
//! bitwise stable across runs and platforms.

use crate::dynamics::{integrate_step, optimal_connect, AgentLimits, State, Trajectory};
use crate::error::{Error, Result};
use crate::geom::ObstacleSet;
use crate::vec::Vector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RrtConfig {
    pub max_iterations: usize,
    /// Steps of one steering extension.
    pub steer_steps: usize,
    /// Candidate accelerations drawn per extension; the one whose endpoint
    /// lands closest to the sampled target (in the tree metric) wins. One
    /// candidate is the exact braking control when the target is slower
    /// than the expanded node, which is what lets extensions settle into a
    /// near-rest goal window.
    pub control_samples: usize,
    /// Probability of sampling the goal state instead of a random state.
    pub goal_bias: f64,
    /// Positional slack for attempting the exact goal connection.
    pub goal_pos_tol: f64,
    /// Velocity slack for attempting the exact goal connection. Keeping it
    /// under the per-axis cap guarantees the connection is feasible whenever
    /// the goal is a rest state.
    pub goal_vel_tol: f64,
    /// Seconds weighting velocity distance in the nearest-neighbour metric:
    /// `|dp| + w |dv|`.
    pub velocity_weight: f64,
}

impl RrtConfig {
    pub fn for_limits(limits: &AgentLimits, dim: usize) -> Self {
        RrtConfig {
            max_iterations: 50_000,
            steer_steps: 5,
            control_samples: 8,
            goal_bias: 0.1,
            goal_pos_tol: limits.radius.max(0.1 * limits.v_max * limits.v_max / limits.a_max),
            goal_vel_tol: 0.8 * limits.axis_v(dim),
            velocity_weight: limits.v_max / limits.a_max,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RrtResult<const D: usize> {
    pub trajectory: Trajectory<D>,
    pub iterations: usize,
    pub nodes: usize,
}

struct Node<const D: usize> {
    state: State<D>,
    parent: u32,
    accel: Vector<D>,
}

/// Uniform-cell spatial index over node positions. Buckets live in a hash
/// map but are only ever looked up by computed key (never iterated), so
/// queries are deterministic.
struct BucketGrid<const D: usize> {
    lo: Vector<D>,
    cell: f64,
    dims: [i64; D],
    buckets: HashMap<u64, Vec<u32>>,
}

impl<const D: usize> BucketGrid<D> {
    fn new(lo: Vector<D>, hi: Vector<D>, cell: f64) -> Self {
        let mut dims = [1i64; D];
        for i in 0..D {
            dims[i] = (((hi[i] - lo[i]) / cell).ceil() as i64).max(1);
        }
        BucketGrid {
            lo,
            cell,
            dims,
            buckets: HashMap::new(),
        }
    }

    fn coords(&self, p: Vector<D>) -> [i64; D] {
        let mut c = [0i64; D];
        for i in 0..D {
            c[i] = (((p[i] - self.lo[i]) / self.cell).floor() as i64).clamp(0, self.dims[i] - 1);
        }
        c
    }

    fn key(&self, c: [i64; D]) -> u64 {
        let mut k = 0u64;
        for i in 0..D {
            k = k * self.dims[i] as u64 + c[i] as u64;
        }
        k
    }

    fn insert(&mut self, p: Vector<D>, idx: u32) {
        let key = self.key(self.coords(p));
        self.buckets.entry(key).or_default().push(idx);
    }

    /// Exact nearest node under `metric`, which must be lower-bounded by
    /// positional distance (rings farther than the best metric are pruned).
    fn nearest(
        &self,
        p: Vector<D>,
        mut metric: impl FnMut(u32) -> f64,
    ) -> Option<u32> {
        let center = self.coords(p);
        let max_ring = *self.dims.iter().max().unwrap();
        let mut best: Option<(f64, u32)> = None;
        for ring in 0..=max_ring {
            if let Some((bm, _)) = best {
                if (ring - 1).max(0) as f64 * self.cell > bm {
                    break;
                }
            }
            self.for_ring_cells(center, ring, |cell| {
                if let Some(bucket) = self.buckets.get(&self.key(cell)) {
                    for &idx in bucket {
                        let m = metric(idx);
                        if best.map_or(true, |(bm, bi)| m < bm || (m == bm && idx < bi)) {
                            best = Some((m, idx));
                        }
                    }
                }
            });
        }
        best.map(|(_, i)| i)
    }

    /// Visit in-bounds cells at exactly Chebyshev distance `ring` from
    /// `center`, in a fixed lexicographic order.
    fn for_ring_cells(&self, center: [i64; D], ring: i64, mut f: impl FnMut([i64; D])) {
        let mut offs = [0i64; D];
        self.ring_rec(center, ring, 0, &mut offs, &mut f);
    }

    fn ring_rec(
        &self,
        center: [i64; D],
        ring: i64,
        axis: usize,
        offs: &mut [i64; D],
        f: &mut impl FnMut([i64; D]),
    ) {
        if axis == D {
            if offs.iter().map(|o| o.abs()).max().unwrap() == ring {
                let mut cell = [0i64; D];
                for i in 0..D {
                    cell[i] = center[i] + offs[i];
                    if cell[i] < 0 || cell[i] >= self.dims[i] {
                        return;
                    }
                }
                f(cell);
            }
            return;
        }
        for o in -ring..=ring {
            offs[axis] = o;
            self.ring_rec(center, ring, axis + 1, offs, f);
        }
    }
}

/// Plan from `start` to `goal` inside `bounds`. The returned trajectory
/// starts at `start` bit for bit and ends exactly at `goal` (velocity
/// bitwise, position to ulps) thanks to the final two-point connection.
#[allow(clippy::too_many_arguments)]
pub fn plan<const D: usize>(
    start: State<D>,
    goal: State<D>,
    bounds: (Vector<D>, Vector<D>),
    obstacles: &ObstacleSet<D>,
    limits: &AgentLimits,
    cfg: &RrtConfig,
    dt: f64,
    seed: u64,
) -> Result<RrtResult<D>> {
    let (lo, hi) = bounds;
    for (what, p) in [("start", start.p), ("goal", goal.p)] {
        for i in 0..D {
            if p[i] < lo[i] || p[i] > hi[i] {
                return Err(Error::PlannerStartBlocked {
                    context: format!("{what} position outside workspace bounds"),
                });
            }
        }
        if let Some(id) = obstacles.point_hits(p) {
            return Err(Error::PlannerStartBlocked {
                context: format!("{what} position inside inflated obstacle {id}"),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cell = (limits.v_max * cfg.steer_steps as f64 * dt).max(1e-6);
    let mut grid = BucketGrid::new(lo, hi, cell);
    let mut nodes: Vec<Node<D>> = vec![Node {
        state: start,
        parent: u32::MAX,
        accel: Vector::ZERO,
    }];
    grid.insert(start.p, 0);

    // The root may already see the goal.
    if let Some(result) =
        attempt_splice(&nodes, 0, goal, bounds, obstacles, limits, cfg, dt, start, 0)
    {
        return Ok(result);
    }

    for iter in 1..=cfg.max_iterations {
        let biased = rng.gen::<f64>() < cfg.goal_bias;
        let target = if biased {
            goal
        } else {
            State {
                p: sample_box(&mut rng, lo, hi),
                v: sample_ball(&mut rng, limits.v_max),
            }
        };
        let near = grid
            .nearest(target.p, |i| {
                let s = &nodes[i as usize].state;
                s.p.dist(target.p) + cfg.velocity_weight * s.v.dist(target.v)
            })
            .expect("tree is never empty");

        // A goal-biased round first tries to finish outright with the exact
        // two-point connection; collision checking arbitrates.
        if biased {
            if let Some(result) = attempt_splice(
                &nodes, near, goal, bounds, obstacles, limits, cfg, dt, start, iter,
            ) {
                return Ok(result);
            }
        }

        let from = nodes[near as usize].state;
        let accel = pick_control(&mut rng, from, target, limits, cfg, dt);
        let Some((_, end)) = steer_collision_checked(
            from,
            accel,
            cfg.steer_steps,
            dt,
            limits.v_max,
            bounds,
            obstacles,
        ) else {
            continue;
        };

        let idx = nodes.len() as u32;
        nodes.push(Node {
            state: end,
            parent: near,
            accel,
        });
        grid.insert(end.p, idx);

        if let Some(result) =
            try_finish(&nodes, idx, goal, bounds, obstacles, limits, cfg, dt, start, iter)
        {
            return Ok(result);
        }
    }
    Err(Error::PlannerExhausted {
        iterations: cfg.max_iterations,
        context: format!(
            "goal {:?} from {:?}, {} nodes",
            goal.p.0,
            start.p.0,
            nodes.len()
        ),
    })
}

/// Choose the extension control: one velocity-matching candidate (the
/// acceleration that steers the node's velocity toward the target's over the
/// edge duration) plus random draws, scored by where they land relative to
/// the target. Collision checking happens after selection, on the winner
/// only; the number of random draws is fixed so the rng stream stays aligned
/// regardless of scores.
fn pick_control<const D: usize>(
    rng: &mut ChaCha8Rng,
    from: State<D>,
    target: State<D>,
    limits: &AgentLimits,
    cfg: &RrtConfig,
    dt: f64,
) -> Vector<D> {
    let edge = cfg.steer_steps as f64 * dt;
    let matching = ((target.v - from.v) / edge).clamp_norm(limits.a_max);
    let mut best = matching;
    let mut best_score = f64::INFINITY;
    let consider = |a: Vector<D>, best: &mut Vector<D>, best_score: &mut f64| {
        let mut s = from;
        for _ in 0..cfg.steer_steps {
            s = steer_step(s, a, dt, limits.v_max).0;
        }
        let score = s.p.dist(target.p) + cfg.velocity_weight * s.v.dist(target.v);
        if score < *best_score {
            *best_score = score;
            *best = a;
        }
    };
    consider(matching, &mut best, &mut best_score);
    for _ in 1..cfg.control_samples.max(1) {
        let a = sample_ball(rng, limits.a_max);
        consider(a, &mut best, &mut best_score);
    }
    best
}

/// Integrate one steering extension, rejecting any step that leaves bounds or
/// crosses an obstacle. Returns the per-step (projection-adjusted)
/// accelerations and the end state.
fn steer_collision_checked<const D: usize>(
    from: State<D>,
    accel: Vector<D>,
    steps: usize,
    dt: f64,
    v_max: f64,
    bounds: (Vector<D>, Vector<D>),
    obstacles: &ObstacleSet<D>,
) -> Option<(Vec<Vector<D>>, State<D>)> {
    let (lo, hi) = bounds;
    let mut accels = Vec::with_capacity(steps);
    let mut s = from;
    for _ in 0..steps {
        let (next, a_step) = steer_step(s, accel, dt, v_max);
        for i in 0..D {
            if next.p[i] < lo[i] || next.p[i] > hi[i] {
                return None;
            }
        }
        if obstacles.segment_hits(s.p, next.p).is_some() {
            return None;
        }
        accels.push(a_step);
        s = next;
    }
    Some((accels, s))
}

/// One steering step: nominal acceleration, then projection of the resulting
/// velocity onto the admissible ball. Projection only shortens the velocity
/// change, so the realised acceleration stays inside the `a_max` ball.
fn steer_step<const D: usize>(
    s: State<D>,
    accel: Vector<D>,
    dt: f64,
    v_max: f64,
) -> (State<D>, Vector<D>) {
    let raw = s.v + accel * dt;
    let clamped = raw.clamp_norm(v_max);
    let a_step = if clamped == raw {
        accel
    } else {
        (clamped - s.v) / dt
    };
    (
        State {
            p: s.p + s.v * dt + a_step * (0.5 * dt * dt),
            v: clamped,
        },
        a_step,
    )
}

/// If `idx` is within goal tolerance, try the exact final connection and
/// assemble the full trajectory.
#[allow(clippy::too_many_arguments)]
fn try_finish<const D: usize>(
    nodes: &[Node<D>],
    idx: u32,
    goal: State<D>,
    bounds: (Vector<D>, Vector<D>),
    obstacles: &ObstacleSet<D>,
    limits: &AgentLimits,
    cfg: &RrtConfig,
    dt: f64,
    start: State<D>,
    iterations: usize,
) -> Option<RrtResult<D>> {
    let s = nodes[idx as usize].state;
    if s.p.dist(goal.p) > cfg.goal_pos_tol || s.v.dist(goal.v) > cfg.goal_vel_tol {
        return None;
    }
    attempt_splice(
        nodes, idx, goal, bounds, obstacles, limits, cfg, dt, start, iterations,
    )
}

/// Try to finish the plan from node `idx` with the exact two-point connection,
/// regardless of distance. A node moving faster than the per-axis cap the
/// connector requires first brakes straight along its velocity until every
/// component fits; the braking run keeps the node's heading, becomes part of
/// the returned trajectory, and is collision-checked like the connection.
#[allow(clippy::too_many_arguments)]
fn attempt_splice<const D: usize>(
    nodes: &[Node<D>],
    idx: u32,
    goal: State<D>,
    bounds: (Vector<D>, Vector<D>),
    obstacles: &ObstacleSet<D>,
    limits: &AgentLimits,
    cfg: &RrtConfig,
    dt: f64,
    start: State<D>,
    iterations: usize,
) -> Option<RrtResult<D>> {
    let s = nodes[idx as usize].state;
    let va = limits.axis_v(D);
    for i in 0..D {
        if goal.v[i].abs() > va {
            return None;
        }
    }

    // Anti-parallel braking shrinks every velocity component proportionally,
    // so per-axis overshoot disappears without turning. One step removes
    // a_max*dt of speed, far below the cap itself, hence no sign flip.
    let (lo, hi) = bounds;
    let mut brake = Vec::new();
    let mut bs = s;
    while (0..D).any(|i| bs.v[i].abs() > va) {
        let speed = bs.v.norm();
        debug_assert!(speed > limits.a_max * dt);
        let a = bs.v * (-limits.a_max / speed);
        let next = integrate_step(bs, a, dt);
        for i in 0..D {
            if next.p[i] < lo[i] || next.p[i] > hi[i] {
                return None;
            }
        }
        if obstacles.segment_hits(bs.p, next.p).is_some() {
            return None;
        }
        brake.push(a);
        bs = next;
    }

    let splice = optimal_connect(bs, goal, limits, dt).ok()?;
    for i in 0..splice.steps() {
        if obstacles
            .segment_hits(splice.point(i).p, splice.point(i + 1).p)
            .is_some()
        {
            return None;
        }
    }

    // Regenerate the tree path bitwise from the stored controls.
    let mut chain = Vec::new();
    let mut cur = idx;
    while cur != 0 {
        chain.push(nodes[cur as usize].accel);
        cur = nodes[cur as usize].parent;
    }
    chain.reverse();
    let mut accels = Vec::with_capacity(chain.len() * cfg.steer_steps + brake.len());
    let mut st = start;
    for a in chain {
        for _ in 0..cfg.steer_steps {
            let (next, a_step) = steer_step(st, a, dt, limits.v_max);
            accels.push(a_step);
            st = next;
        }
    }
    debug_assert_eq!(st.p, s.p);
    debug_assert_eq!(st.v, s.v);
    accels.extend_from_slice(&brake);
    let tree_part = Trajectory::from_accels(start, dt, &accels);
    let full = tree_part.concat(&splice, 1e-9).ok()?;
    Some(RrtResult {
        trajectory: full,
        iterations,
        nodes: nodes.len(),
    })
}

fn sample_box<const D: usize>(
    rng: &mut ChaCha8Rng,
    lo: Vector<D>,
    hi: Vector<D>,
) -> Vector<D> {
    let mut p = Vector::ZERO;
    for i in 0..D {
        p[i] = rng.gen_range(lo[i]..=hi[i]);
    }
    p
}

fn sample_ball<const D: usize>(rng: &mut ChaCha8Rng, radius: f64) -> Vector<D> {
    loop {
        let mut v = Vector::ZERO;
        for i in 0..D {
            v[i] = rng.gen_range(-1.0..=1.0);
        }
        if v.norm_sq() <= 1.0 {
            return v * radius;
        }
    }
}
