//! Two-point boundary connection and travel-time estimates.
//!
//! Axes are decoupled by budgeting each one `v_max / sqrt(D)` of speed and
//! `a_max / sqrt(D)` of acceleration: any combination of per-axis-feasible
//! profiles then satisfies the Euclidean bounds. The joint horizon is the
//! slowest axis's minimum time rounded up to whole steps, and every axis is
//! re-solved on that common horizon.

use crate::consts::EPS_DYN;
use crate::dynamics::profile::{min_time_1d, solve_fixed_steps};
use crate::dynamics::{AgentLimits, State, Trajectory};
use crate::error::{Error, Result};
use crate::vec::Vector;

/// Time-optimal-per-axis trajectory from `from` to `to` on the step grid.
/// Endpoint positions and velocities are met exactly (velocities bit for
/// bit, positions to a few ulps). Endpoint velocities must respect the
/// per-axis cap; bridge boundary states and composed plan junctions do by
/// construction.
///
/// With a rest endpoint (how the pipeline always calls this) the horizon
/// search succeeds within a couple of steps of the per-axis optimum. With
/// both endpoint velocities nonzero an axis's feasible horizons can be two
/// disjoint intervals (stretching a signed-velocity motion forces drift), so
/// if no common horizon exists near the optimum the connection falls back to
/// stopping at an intermediate point and restarting.
pub fn optimal_connect<const D: usize>(
    from: State<D>,
    to: State<D>,
    limits: &AgentLimits,
    dt: f64,
) -> Result<Trajectory<D>> {
    let va = limits.axis_v(D);
    let tol = EPS_DYN * limits.v_max;
    for axis in 0..D {
        for (name, v) in [("start", from.v[axis]), ("end", to.v[axis])] {
            if v.abs() > va + tol {
                return Err(Error::ConnectInfeasible(format!(
                    "{name} velocity component {v:.6} on axis {axis} exceeds per-axis cap {va:.6}"
                )));
            }
        }
    }
    if from.p == to.p && from.v == to.v {
        return Ok(Trajectory::single(from, dt));
    }

    if let Some(t) = connect_direct(from, to, limits, dt, 256) {
        return Ok(t);
    }

    // Brake to rest along each axis, then restart. Both legs have a rest
    // endpoint, whose feasible horizons are one interval, so they resolve
    // directly.
    let aa = limits.axis_a(D);
    let mut stop = from.p;
    for axis in 0..D {
        let v = from.v[axis].clamp(-va, va);
        stop[axis] += v * v.abs() / (2.0 * aa);
    }
    let mid = State::at_rest(stop);
    let leg1 = connect_direct(from, mid, limits, dt, 4096).ok_or_else(|| {
        Error::ConnectInfeasible("braking leg found no horizon".into())
    })?;
    let leg2 = connect_direct(mid, to, limits, dt, 4096).ok_or_else(|| {
        Error::ConnectInfeasible("restart leg found no horizon".into())
    })?;
    leg1.concat(&leg2, 1e-9)
}

/// Common-horizon search: all axes solved on the smallest step count at or
/// above the per-axis continuous optimum, scanning a bounded window.
fn connect_direct<const D: usize>(
    from: State<D>,
    to: State<D>,
    limits: &AgentLimits,
    dt: f64,
    window: usize,
) -> Option<Trajectory<D>> {
    let va = limits.axis_v(D);
    let aa = limits.axis_a(D);
    if from.p == to.p && from.v == to.v {
        return Some(Trajectory::single(from, dt));
    }
    let mut theta = 0.0f64;
    for axis in 0..D {
        let t = min_time_1d(
            to.p[axis] - from.p[axis],
            from.v[axis].clamp(-va, va),
            to.v[axis].clamp(-va, va),
            va,
            aa,
        );
        theta = theta.max(t);
    }
    let n0 = ((theta / dt) - 1e-9).ceil().max(1.0) as usize;

    'horizon: for n in n0..n0 + window {
        let mut axes: Vec<Vec<f64>> = Vec::with_capacity(D);
        for axis in 0..D {
            match solve_fixed_steps(
                from.p[axis],
                to.p[axis],
                from.v[axis].clamp(-va, va),
                to.v[axis].clamp(-va, va),
                va,
                aa,
                dt,
                n,
            ) {
                Some(s) => axes.push(s),
                None => continue 'horizon,
            }
        }
        let samples: Vec<Vector<D>> = (0..=n)
            .map(|i| {
                let mut v = Vector::ZERO;
                for axis in 0..D {
                    v[axis] = axes[axis][i];
                }
                v
            })
            .collect();
        return Some(Trajectory::from_velocity_samples(from.p, dt, &samples));
    }
    None
}

/// Continuous rest-to-rest travel-time estimate between two points under the
/// per-axis budget: the slowest axis of the decoupled minimum-time laws. It
/// is symmetric and satisfies the triangle inequality (each axis's law does).
pub fn travel_time<const D: usize>(from: Vector<D>, to: Vector<D>, limits: &AgentLimits) -> f64 {
    let va = limits.axis_v(D);
    let aa = limits.axis_a(D);
    let mut t = 0.0f64;
    for axis in 0..D {
        t = t.max(min_time_1d((to[axis] - from[axis]).abs(), 0.0, 0.0, va, aa));
    }
    t
}

/// Inverse of the per-axis rest-to-rest law: the largest per-axis distance
/// coverable (start and end at rest) in time `tau`. Membership in a
/// reachability region is a Chebyshev-distance comparison against this.
pub fn axis_reach(tau: f64, limits: &AgentLimits, dim: usize) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let va = limits.axis_v(dim);
    let aa = limits.axis_a(dim);
    if tau <= 2.0 * va / aa {
        aa * tau * tau * 0.25
    } else {
        va * tau - va * va / aa
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec::{Vec2, Vec3};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn limits() -> AgentLimits {
        AgentLimits {
            radius: 0.5,
            v_max: 3.0,
            a_max: 2.0,
        }
    }

    #[test]
    fn connects_exactly_and_validates() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let lim = limits();
        let va = lim.axis_v(2);
        for _ in 0..300 {
            let from = State::new(
                Vec2::new2(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)),
                Vec2::new2(rng.gen_range(-va..va), rng.gen_range(-va..va)),
            );
            let to = State::new(
                Vec2::new2(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)),
                Vec2::new2(rng.gen_range(-va..va), rng.gen_range(-va..va)),
            );
            let dt = rng.gen_range(0.02..0.1);
            let traj = optimal_connect(from, to, &lim, dt).unwrap();
            assert_eq!(traj.first().p, from.p);
            assert_eq!(traj.first().v, from.v);
            assert_eq!(traj.last().v, to.v);
            assert!(traj.last().p.dist(to.p) < 1e-9, "{}", traj.last().p.dist(to.p));
            let report = traj.validate(&lim);
            assert!(report.is_ok(), "{:?}", report.violations[0]);
        }
    }

    #[test]
    fn duration_tracks_per_axis_optimum() {
        let lim = limits();
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let va = lim.axis_v(2);
        let aa = lim.axis_a(2);
        for _ in 0..100 {
            let from = State::at_rest(Vec2::new2(rng.gen_range(-20.0..20.0), 0.0));
            let to = State::at_rest(Vec2::new2(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)));
            let dt = 0.05;
            let traj = optimal_connect(from, to, &lim, dt).unwrap();
            let theta = (0..2)
                .map(|ax| min_time_1d((to.p[ax] - from.p[ax]).abs(), 0.0, 0.0, va, aa))
                .fold(0.0, f64::max);
            assert!(traj.duration() + 1e-9 >= theta - dt);
            assert!(traj.duration() <= theta + 4.0 * dt, "dur {} vs theta {theta}", traj.duration());
        }
    }

    #[test]
    fn known_travel_times() {
        // Pure-x move of 2 under per-axis caps v=3/sqrt2, a=2/sqrt2 is
        // cap-limited: t = d/v' + v'/a' = 2 sqrt(2)/3 + 3/2 = 2.4428 approx.
        let lim = limits();
        let t = travel_time(Vec2::ZERO, Vec2::new2(2.0, 0.0), &lim);
        let va = 3.0 / 2.0f64.sqrt();
        let aa = 2.0 / 2.0f64.sqrt();
        let want = if 2.0 <= va * va / aa {
            2.0 * (2.0f64 / aa).sqrt()
        } else {
            2.0 / va + va / aa
        };
        assert!((t - want).abs() < 1e-12);
        assert_eq!(travel_time(Vec2::ZERO, Vec2::ZERO, &lim), 0.0);
        // Symmetry.
        let a = Vec2::new2(1.0, -4.0);
        let b = Vec2::new2(-3.0, 2.0);
        assert_eq!(travel_time(a, b, &lim), travel_time(b, a, &lim));
    }

    #[test]
    fn axis_reach_inverts_travel_time() {
        let lim = limits();
        for dim in [2usize, 3] {
            for tau in [0.1, 0.5, 1.0, 2.0, 5.0, 20.0] {
                let d = axis_reach(tau, &lim, dim);
                let t = min_time_1d(d, 0.0, 0.0, lim.axis_v(dim), lim.axis_a(dim));
                assert!((t - tau).abs() < 1e-9, "dim {dim} tau {tau}: {t}");
            }
        }
        assert_eq!(axis_reach(0.0, &limits(), 2), 0.0);
        assert_eq!(axis_reach(-1.0, &limits(), 2), 0.0);
    }

    #[test]
    fn identical_states_yield_zero_duration() {
        let s = State::new(Vec2::new2(1.0, 2.0), Vec2::new2(0.5, 0.0));
        let t = optimal_connect(s, s, &limits(), 0.05).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.duration(), 0.0);
    }

    #[test]
    fn rejects_over_cap_endpoint_velocity() {
        let lim = limits();
        let fast = State::new(Vec2::ZERO, Vec2::new2(3.0, 0.0)); // 3.0 > 3/sqrt(2)
        let rest = State::at_rest(Vec2::new2(5.0, 0.0));
        assert!(optimal_connect(fast, rest, &lim, 0.05).is_err());
    }

    #[test]
    fn three_d_connects() {
        let lim = limits();
        let from = State::at_rest(Vec3::new3(0.0, 0.0, 0.0));
        let to = State::at_rest(Vec3::new3(4.0, -2.0, 7.0));
        let traj = optimal_connect(from, to, &lim, 0.05).unwrap();
        assert!(traj.last().p.dist(to.p) < 1e-9);
        assert!(traj.validate(&lim).is_ok());
    }

    /// The discrete stop-in-place used when bringing boundary trajectories to
    /// rest: displacement zero with a moving start.
    #[test]
    fn stop_in_place() {
        let lim = limits();
        let va = lim.axis_v(2);
        let from = State::new(Vec2::new2(1.0, 1.0), Vec2::new2(va * 0.9, -va * 0.4));
        let to = State::at_rest(Vec2::new2(1.0, 1.0));
        let traj = optimal_connect(from, to, &lim, 0.05).unwrap();
        assert_eq!(traj.last().v, Vec2::ZERO);
        assert!(traj.last().p.dist(to.p) < 1e-9);
        assert!(traj.validate(&lim).is_ok());
    }
}
