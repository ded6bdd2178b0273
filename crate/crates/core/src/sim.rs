//! End-to-end pipeline: assign every agent a bridge, compose its four-phase
//! plan (free-space approach, entrance adjustment, bridge ride, free-space
//! return), postpone plans until no two collide, then verify the whole batch
//! with an independent fine-resolution audit.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::bridge::{adjust_in_entrance, construct_bridge, Bridge, BridgeConfig};
use crate::consts::{EPS_DYN, EPS_GEOM};
use crate::dynamics::{optimal_connect, AgentLimits, State, Trajectory};
use crate::error::{Error, Result};
use crate::geom::{Aabb, ObstacleSet};
use crate::reach::{assign_bridges, bridge_seed, Assignment, ReachRegion};
use crate::scenario::Scenario;
use crate::schedule::{schedule_all, PhaseMarks, Plan, ScheduleStats};
use crate::vec::Vector;

/// Audit sub-sampling: positions are checked at `dt / AUDIT_SUBSTEPS`.
const AUDIT_SUBSTEPS: usize = 10;
const BLOCK: usize = 32;

/// Deterministic per-run quantities. Identical scenarios and seeds produce
/// identical values, bit for bit.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub agent_agent_collision_events: usize,
    pub agent_obstacle_collision_events: usize,
    /// Latest occupied step over all plans, delays included.
    pub frames: usize,
    pub makespan_seconds: f64,
    pub bridge_count: usize,
    pub narrow_checks: usize,
    pub block_checks: usize,
    pub certified_steps: usize,
    pub postponements: usize,
}

/// Wall-clock seconds per pipeline stage; excluded from the determinism
/// contract and from trajectory logs.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PhaseTimings {
    pub assign_seconds: f64,
    pub compose_seconds: f64,
    pub schedule_seconds: f64,
    pub audit_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct SimResult<const D: usize> {
    pub plans: Vec<Plan<D>>,
    pub bridges: Vec<Bridge<D>>,
    pub assignment: Assignment,
    pub metrics: Metrics,
    pub timings: PhaseTimings,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub agent_agent_events: usize,
    pub agent_obstacle_events: usize,
}

/// A composed plan's trajectory must stay inside `bounds` and off the
/// inflated obstacles. Chord tests between consecutive waypoints plus the
/// interior per-axis extremes; the fine audit independently re-verifies.
fn check_phase<const D: usize>(
    traj: &Trajectory<D>,
    obstacles: &ObstacleSet<D>,
    bounds: (Vector<D>, Vector<D>),
    agent: usize,
    phase: &str,
) -> Result<()> {
    let (lo, hi) = bounds;
    let tol = EPS_GEOM;
    for (i, w) in traj.points().iter().enumerate() {
        for axis in 0..D {
            if w.p[axis] < lo[axis] - tol || w.p[axis] > hi[axis] + tol {
                return Err(Error::AgentFailed {
                    agent,
                    detail: format!("{phase} phase leaves the workspace at step {i}"),
                });
            }
        }
    }
    for i in 0..traj.steps() {
        let a = traj.point(i).p;
        let b = traj.point(i + 1).p;
        if let Some(id) = obstacles.segment_hits(a, b) {
            return Err(Error::AgentFailed {
                agent,
                detail: format!("{phase} phase crosses obstacle {id} at step {i}"),
            });
        }
        for e in traj.segment_extremes(i) {
            if let Some(id) = obstacles.point_hits(e) {
                return Err(Error::AgentFailed {
                    agent,
                    detail: format!("{phase} phase grazes obstacle {id} inside step {i}"),
                });
            }
        }
    }
    Ok(())
}

/// Compose one agent's full plan through its assigned bridge:
/// 1. free-space connection from the start state to the entrance staging
///    state: an axis-capped speed along the bridge axis behind the mouth
///    (the entry velocity itself exceeds the per-axis connect envelope),
/// 2. the entrance run: a full-thrust burst onto the entry velocity and a
///    coast through the gate, landing on the clamped projection of the
///    start, then `adjust_in_entrance` to certify the final arrival,
/// 3. convex-combination ride through the bridge, trailing rest trimmed,
/// 4. free-space connection from the exit state to the goal, at rest.
/// Phases 1 and 4 are collision-checked; 2 and 3 are certified by entrance
/// containment and the bridge strip.
#[allow(clippy::too_many_arguments)]
pub fn compose_plan<const D: usize>(
    agent: usize,
    start: State<D>,
    goal: Vector<D>,
    bridge: &Bridge<D>,
    obstacles: &ObstacleSet<D>,
    bounds: (Vector<D>, Vector<D>),
    limits: &AgentLimits,
    dt: f64,
) -> Result<Plan<D>> {
    let gate = &bridge.start_gate;
    let entrance = &bridge.entrance;
    let ctol = entrance.containment_tol(dt);
    let fail = |phase: &str, detail: String| Error::AgentFailed {
        agent,
        detail: format!("{phase} phase: {detail}"),
    };

    // A start already on the gate with the entry velocity needs no approach
    // at all; re-projecting it could perturb the entry by an ulp.
    let on_gate = start.v == bridge.v0 && gate.weights(start.p, bridge.gate_tol()).is_some();
    let (approach, run_in) = if on_gate {
        (Trajectory::single(start, dt), Trajectory::single(start, dt))
    } else {
        let entry_target = gate.clamp_entry(start.p, bridge.gate_tol());
        let (stage, run_in) = entrance.approach(entry_target, dt);
        let approach = if start.p == stage.p && start.v == stage.v {
            Trajectory::single(start, dt)
        } else {
            optimal_connect(start, stage, limits, dt)
                .map_err(|e| fail("approach", e.to_string()))?
        };
        (approach, run_in)
    };
    check_phase(&approach, obstacles, bounds, agent, "approach")?;
    // The entrance run stays inside the region validated against obstacles
    // at construction; containment is the whole check.
    for (i, w) in run_in.points().iter().enumerate() {
        if !entrance.contains(w.p, ctol) {
            return Err(fail(
                "entrance",
                format!("run leaves the entrance region at step {i}"),
            ));
        }
    }

    let adjusted = adjust_in_entrance(entrance, run_in.last(), dt)
        .map_err(|e| fail("entrance", e.to_string()))?;

    let mut ride = bridge
        .interpolate(adjusted.entry)
        .map_err(|e| fail("bridge", e.to_string()))?;
    // Departing as soon as the blend rests keeps the end gate free for the
    // next arrival instead of dwelling until the shared boundary horizon.
    ride.trim_rest(EPS_GEOM);

    let exit = ride.last();
    let back = optimal_connect(exit, State::at_rest(goal), limits, dt)
        .map_err(|e| fail("return", e.to_string()))?;
    check_phase(&back, obstacles, bounds, agent, "return")?;

    let entrance_entry = approach
        .points()
        .iter()
        .position(|w| entrance.contains(w.p, ctol))
        .unwrap_or(approach.steps());

    let jtol = EPS_DYN * limits.v_max.max(1.0);
    let bridge_entry = approach.steps() + run_in.steps() + adjusted.trajectory.steps();
    let bridge_exit = bridge_entry + ride.steps();
    let trajectory = approach
        .concat(&run_in, jtol)?
        .concat(&adjusted.trajectory, jtol)?
        .concat(&ride, jtol)?
        .concat(&back, jtol)?;

    Plan::new(
        agent,
        bridge.id,
        trajectory,
        PhaseMarks {
            entrance_entry,
            bridge_entry,
            bridge_exit,
        },
    )
}

/// Run the whole pipeline on a validated scenario. Deterministic for a fixed
/// seed; the returned metrics come from the independent audit, not from the
/// scheduler's own bookkeeping.
pub fn run_scenario<const D: usize>(s: &Scenario<D>) -> Result<SimResult<D>> {
    let t_start = Instant::now();
    let mut timings = PhaseTimings::default();

    if s.agents.is_empty() {
        return Ok(SimResult {
            plans: Vec::new(),
            bridges: Vec::new(),
            assignment: Assignment {
                bridge_of: Vec::new(),
            },
            metrics: Metrics::default(),
            timings,
        });
    }

    let bounds = s.inner_bounds();
    let cfg = BridgeConfig::for_limits(&s.limits, D);
    let t0 = Instant::now();
    let (assignment, mut bridges) = assign_bridges(
        &s.agents,
        &s.obstacles,
        bounds,
        &s.limits,
        s.tau,
        &cfg,
        s.dt,
        s.seed,
    )?;
    let mut bridge_of = assignment.bridge_of;
    timings.assign_seconds = t0.elapsed().as_secs_f64();

    // Reachability ignores obstacles, so the initial assignment can hand an
    // agent a bridge it cannot actually approach (the connection would cross
    // a wall). Composition arbitrates: agents whose plans fail get a fresh
    // bridge seeded from the first failure, exactly like the assignment
    // loop, until every agent holds a plan or a failure survives on an
    // agent's own bridge.
    let t0 = Instant::now();
    let n = s.agents.len();
    let mut plans: Vec<Option<Plan<D>>> = (0..n).map(|_| None).collect();
    let mut seeded_own = vec![false; n];
    loop {
        let mut first_err: Option<(usize, Error)> = None;
        for (i, &(start, goal)) in s.agents.iter().enumerate() {
            if plans[i].is_some() {
                continue;
            }
            match compose_plan(
                i,
                State::at_rest(start),
                goal,
                &bridges[bridge_of[i]],
                &s.obstacles,
                bounds,
                &s.limits,
                s.dt,
            ) {
                Ok(p) => plans[i] = Some(p),
                Err(e) => {
                    if first_err.is_none() {
                        first_err = Some((i, e));
                    }
                }
            }
        }
        let Some((i0, err)) = first_err else { break };
        // An agent failing on a bridge freshly anchored at its own start and
        // goal has nowhere left to fall back to.
        if seeded_own[i0] {
            return Err(err);
        }
        seeded_own[i0] = true;
        let id = bridges.len();
        let (start, goal) = s.agents[i0];
        let bridge = construct_bridge(
            id,
            start,
            goal,
            &s.obstacles,
            bounds,
            &s.limits,
            &cfg,
            s.dt,
            bridge_seed(s.seed, id),
        )?;
        let back = ReachRegion::backward_of(&bridge, s.tau)?;
        let fwd = ReachRegion::forward_of(&bridge, s.tau)?;
        for (j, &(sj, gj)) in s.agents.iter().enumerate() {
            if plans[j].is_none() && back.contains(sj, &s.limits) && fwd.contains(gj, &s.limits) {
                bridge_of[j] = id;
            }
        }
        if bridge_of[i0] != id {
            return Err(Error::InvalidScenario(format!(
                "agent {i0}: horizon tau={} does not span its own bridge's \
                 entrance and exit; raise tau",
                s.tau
            )));
        }
        bridges.push(bridge);
    }
    let plans: Vec<Plan<D>> = plans.into_iter().map(|p| p.unwrap()).collect();
    let assignment = Assignment { bridge_of };
    timings.compose_seconds = t0.elapsed().as_secs_f64();

    // Between checked steps each centre moves at most v_max*dt, and the
    // mid-step approach is bounded by the nearer endpoint, so endpoint
    // distances of 2r + v_max*dt guarantee 2r throughout the step.
    let r_sched = s.limits.radius + 0.5 * s.limits.v_max * s.dt;
    let t0 = Instant::now();
    let (plans, sched_stats) = schedule_all(plans, &bridges, r_sched, s.delta_t)?;
    timings.schedule_seconds = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let report = audit(&plans, s);
    timings.audit_seconds = t0.elapsed().as_secs_f64();
    timings.total_seconds = t_start.elapsed().as_secs_f64();

    let metrics = build_metrics(&plans, &bridges, s.dt, sched_stats, report);
    Ok(SimResult {
        plans,
        bridges,
        assignment,
        metrics,
        timings,
    })
}

fn build_metrics<const D: usize>(
    plans: &[Plan<D>],
    bridges: &[Bridge<D>],
    dt: f64,
    sched: ScheduleStats,
    report: AuditReport,
) -> Metrics {
    let frames = plans
        .iter()
        .map(|p| p.delay_steps + p.trajectory.steps())
        .max()
        .unwrap_or(0);
    Metrics {
        agent_agent_collision_events: report.agent_agent_events,
        agent_obstacle_collision_events: report.agent_obstacle_events,
        frames,
        makespan_seconds: frames as f64 * dt,
        bridge_count: bridges.len(),
        narrow_checks: sched.checks.narrow_checks,
        block_checks: sched.checks.block_checks,
        certified_steps: sched.checks.certified_steps,
        postponements: sched.postponements,
    }
}

/// Position of a scheduled plan at continuous time `t`: parked at the first
/// waypoint before departure, the exact within-step quadratic while active,
/// parked at the last waypoint afterwards.
fn pose_at_time<const D: usize>(plan: &Plan<D>, t: f64, dt: f64) -> Vector<D> {
    let local = t - plan.delay_steps as f64 * dt;
    let traj = &plan.trajectory;
    if local <= 0.0 {
        return traj.point(0).p;
    }
    let steps = traj.steps();
    let k = (local / dt).floor() as usize;
    if k >= steps {
        return traj.point(steps).p;
    }
    let w = traj.point(k);
    let d = local - k as f64 * dt;
    w.p + w.v * d + w.a * (0.5 * d * d)
}

/// Axis-aligned boxes covering each plan's position over global-step blocks
/// of `BLOCK`, grown to bound within-step curvature, with parked endpoint
/// poses folded in by clamping.
fn global_blocks<const D: usize>(plan: &Plan<D>, frames: usize, margin: f64) -> Vec<Aabb<D>> {
    let steps = plan.trajectory.steps();
    let mut out = Vec::with_capacity(frames / BLOCK + 1);
    let mut b = 0;
    while b * BLOCK <= frames {
        let g0 = b * BLOCK;
        let g1 = (g0 + BLOCK).min(frames);
        let lo = g0.saturating_sub(plan.delay_steps).min(steps);
        let hi = g1.saturating_sub(plan.delay_steps).min(steps);
        let mut aabb = Aabb::empty();
        for i in lo..=hi {
            aabb.grow(plan.trajectory.point(i).p);
        }
        out.push(aabb.inflate(margin));
        b += 1;
    }
    out
}

/// Independent verification pass: re-scan every scheduled plan pair and every
/// plan-obstacle pair at `dt / 10` resolution using exact within-step
/// quadratic positions, with agents parked at their endpoints outside their
/// active window. An event is a maximal contiguous overlap interval.
pub fn audit<const D: usize>(plans: &[Plan<D>], s: &Scenario<D>) -> AuditReport {
    let mut report = AuditReport::default();
    if plans.is_empty() {
        return report;
    }
    let dt = s.dt;
    let r = s.limits.radius;
    let frames = plans
        .iter()
        .map(|p| p.delay_steps + p.trajectory.steps())
        .max()
        .unwrap();
    // Within one step the position stays within one full-speed step (plus
    // curvature) of its waypoint.
    let margin = s.limits.v_max * dt + 0.5 * s.limits.a_max * dt * dt;
    let blocks: Vec<Vec<Aabb<D>>> = plans
        .iter()
        .map(|p| global_blocks(p, frames, margin))
        .collect();
    let sub = dt / AUDIT_SUBSTEPS as f64;

    for i in 0..plans.len() {
        for j in i + 1..plans.len() {
            let mut inside = false;
            for (b, (bi, bj)) in blocks[i].iter().zip(&blocks[j]).enumerate() {
                if bi.distance(bj) >= 2.0 * r {
                    inside = false;
                    continue;
                }
                let k0 = b * BLOCK * AUDIT_SUBSTEPS;
                let k1 = (((b + 1) * BLOCK).min(frames)) * AUDIT_SUBSTEPS;
                for k in k0..=k1 {
                    let t = k as f64 * sub;
                    let d = pose_at_time(&plans[i], t, dt).dist(pose_at_time(&plans[j], t, dt));
                    let now = d < 2.0 * r;
                    if now && !inside {
                        report.agent_agent_events += 1;
                    }
                    inside = now;
                }
            }
        }
    }

    for (i, plan) in plans.iter().enumerate() {
        for obs in &s.obstacles.obstacles {
            let mut inside = false;
            for (b, bi) in blocks[i].iter().enumerate() {
                if !bi.overlaps(&obs.aabb) {
                    inside = false;
                    continue;
                }
                let k0 = b * BLOCK * AUDIT_SUBSTEPS;
                let k1 = (((b + 1) * BLOCK).min(frames)) * AUDIT_SUBSTEPS;
                for k in k0..=k1 {
                    let t = k as f64 * sub;
                    let p = pose_at_time(plan, t, dt);
                    let now = crate::geom::hull_distance(&[p], &obs.vertices) < r;
                    if now && !inside {
                        report.agent_obstacle_events += 1;
                    }
                    inside = now;
                }
            }
        }
    }
    report
}

/// Trajectory log: one row per plan waypoint, `agent,step,t,p..,v..,a..,phase`
/// with `t` including the scheduled delay. Rows are strictly increasing in
/// (agent, step); floats use shortest round-trip formatting, so equal runs
/// produce byte-identical logs.
pub fn trajectory_csv<const D: usize>(plans: &[Plan<D>], dt: f64) -> String {
    let mut out = String::new();
    out.push_str("agent,step,t");
    for axis in ["x", "y", "z"].iter().take(D) {
        let _ = write!(out, ",p{axis}");
    }
    for axis in ["x", "y", "z"].iter().take(D) {
        let _ = write!(out, ",v{axis}");
    }
    for axis in ["x", "y", "z"].iter().take(D) {
        let _ = write!(out, ",a{axis}");
    }
    out.push_str(",phase\n");
    for plan in plans {
        for (i, w) in plan.trajectory.points().iter().enumerate() {
            let m = &plan.marks;
            let phase = if i < m.entrance_entry {
                1
            } else if i < m.bridge_entry {
                2
            } else if i <= m.bridge_exit {
                3
            } else {
                4
            };
            let t = (plan.delay_steps + i) as f64 * dt;
            let _ = write!(out, "{},{},{}", plan.agent, i, t);
            for axis in 0..D {
                let _ = write!(out, ",{}", w.p[axis]);
            }
            for axis in 0..D {
                let _ = write!(out, ",{}", w.v[axis]);
            }
            for axis in 0..D {
                let _ = write!(out, ",{}", w.a[axis]);
            }
            let _ = writeln!(out, ",{phase}");
        }
    }
    out
}

/// Metrics document: a `[metrics]` table (deterministic) plus a `[timings]`
/// table (wall clock, machine dependent).
pub fn metrics_toml(metrics: &Metrics, timings: &PhaseTimings) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        metrics: &'a Metrics,
        timings: &'a PhaseTimings,
    }
    toml::to_string(&Doc { metrics, timings }).expect("metrics always serialize")
}
