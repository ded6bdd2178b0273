//! Entrance buffers. An agent can arrive at a bridge with any admissible
//! velocity; before interpolation starts it must carry exactly the shared
//! entry velocity `v0`. The entrance is a flared region in front of the
//! start gate sized so that one constant-direction acceleration burst
//! (the velocity gap closed at full thrust) always fits inside it:
//!
//! * depth along the axis: sqrt(2/3) v^2/a, which upper-bounds the forward
//!   distance any admissible turn needs;
//! * lateral flare at the mouth: sqrt(1/2) v^2/a, the largest transverse
//!   drift of a full-speed turn;
//! * the side wall follows the worst-case turn's parabola from the mouth,
//!   then runs parallel to the axis for the remaining
//!   (sqrt(2/3) - sqrt(1/2)) v^2/a before meeting the gate corner;
//! * a straight back corridor of braking length (plus one radius) behind
//!   the mouth keeps the quantized approach run inside certified space.

use super::{gate_points, perp_dirs, Gate};
use crate::consts::{EPS_DYN, EPS_GEOM};
use crate::dynamics::{AgentLimits, State, Trajectory};
use crate::error::{Error, Result};
use crate::geom::{interior_obstacle_hit, triangulate_boundaries, ObstacleSet, TriangulatedStrip};
use crate::vec::Vector;

#[derive(Clone, Debug)]
pub struct Entrance<const D: usize> {
    pub bridge_id: usize,
    pub gate: Gate<D>,
    /// Unit axis into the bridge; the gate plane sits at axial depth, the
    /// mouth plane at 0.
    pub dir: Vector<D>,
    perps: Vec<Vector<D>>,
    pub halfwidth: f64,
    pub depth: f64,
    pub flare: f64,
    /// Axial extent of the parabolic wall section (equals the flare).
    pub parab_len: f64,
    /// Axial extent of the straight wall section before the gate.
    pub line_len: f64,
    pub back_buffer: f64,
    pub region: TriangulatedStrip<D>,
    pub v0: Vector<D>,
    limits: AgentLimits,
}

/// Result of an in-entrance velocity adjustment.
#[derive(Clone, Debug)]
pub struct Adjusted<const D: usize> {
    /// From the arrival state to the last grid point before the gate plane;
    /// ends with exactly the bridge entry velocity.
    pub trajectory: Trajectory<D>,
    /// Continuous duration of the acceleration burst, |v0 - v_arrival| / a.
    pub turn_time: f64,
    /// Where the coasting agent crosses the gate plane; the entry point for
    /// interpolation.
    pub entry: Vector<D>,
}

impl<const D: usize> Entrance<D> {
    pub fn build(
        bridge_id: usize,
        gate: &Gate<D>,
        dir: Vector<D>,
        halfwidth: f64,
        limits: &AgentLimits,
        obstacles: &ObstacleSet<D>,
    ) -> Result<Self> {
        let v = limits.v_max;
        let a = limits.a_max;
        let vva = v * v / a;
        let depth = (2.0f64 / 3.0).sqrt() * vva;
        let flare = 0.5f64.sqrt() * vva;
        let parab_len = flare;
        let line_len = depth - parab_len;
        let back_buffer = 0.5 * vva + limits.radius;
        let perps = perp_dirs(dir);

        // Wall profile samples (axial offset from the mouth, half-width).
        let t_turn = std::f64::consts::SQRT_2 * v / a;
        let h = halfwidth;
        let mut profile = vec![(-back_buffer, h + flare)];
        for i in 0..=16 {
            let t = t_turn * i as f64 / 16.0;
            let x = a / (2.0 * std::f64::consts::SQRT_2) * t * t;
            let drop = v * t - x;
            profile.push((x, h + flare - drop));
        }
        profile.push((depth, h));

        let center = gate.center();
        let axis_at = |xi: f64| center + dir * (xi - depth);
        let curves: Vec<Vec<Vector<D>>> = if D == 2 {
            let upper = profile.iter().map(|&(xi, w)| axis_at(xi) + perps[0] * w).collect();
            let lower = profile.iter().map(|&(xi, w)| axis_at(xi) - perps[0] * w).collect();
            vec![upper, lower]
        } else {
            (0..6)
                .map(|k| {
                    let ang = k as f64 / 6.0 * std::f64::consts::TAU;
                    let r = perps[0] * ang.cos() + perps[1] * ang.sin();
                    profile.iter().map(|&(xi, w)| axis_at(xi) + r * w).collect()
                })
                .collect()
        };
        let region = triangulate_boundaries(&curves)?;
        if let Some((_, obstacle)) = region.collides(obstacles) {
            return Err(Error::EntranceBlocked {
                bridge: bridge_id,
                obstacle,
            });
        }
        if let Some(obstacle) = interior_obstacle_hit(&region, obstacles) {
            return Err(Error::EntranceBlocked {
                bridge: bridge_id,
                obstacle,
            });
        }

        Ok(Entrance {
            bridge_id,
            gate: gate.clone(),
            dir,
            perps,
            halfwidth,
            depth,
            flare,
            parab_len,
            line_len,
            back_buffer,
            region,
            v0: dir * v,
            limits: *limits,
        })
    }

    pub fn limits(&self) -> &AgentLimits {
        &self.limits
    }

    pub fn mouth_center(&self) -> Vector<D> {
        self.gate.center() - self.dir * self.depth
    }

    /// Duration of the longest admissible velocity turn, sqrt(2) v / a.
    pub fn worst_turn_time(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.limits.v_max / self.limits.a_max
    }

    /// Region half-width at axial offset `xi` from the mouth.
    fn profile_halfwidth(&self, xi: f64) -> f64 {
        let h = self.halfwidth;
        if xi <= 0.0 {
            return h + self.flare;
        }
        if xi >= self.parab_len {
            return h;
        }
        let a = self.limits.a_max;
        let v = self.limits.v_max;
        let t = (xi * 2.0 * std::f64::consts::SQRT_2 / a).sqrt();
        let drop = v * t - xi;
        h + self.flare - drop
    }

    /// Is `p` inside the entrance region, within `tol`?
    pub fn contains(&self, p: Vector<D>, tol: f64) -> bool {
        let rel = p - self.gate.center();
        let xi = rel.dot(self.dir) + self.depth;
        if xi < -self.back_buffer - tol || xi > self.depth + tol {
            return false;
        }
        let w = self.profile_halfwidth(xi.clamp(-self.back_buffer, self.depth));
        let q = rel - self.dir * rel.dot(self.dir);
        if D == 2 {
            return q.norm() <= w + tol;
        }
        // Regular hexagon with circumradius w: inside iff within every edge
        // half-plane at distance w cos(30 deg).
        let x = q.dot(self.perps[0]);
        let y = q.dot(self.perps[1]);
        let inr = w * (std::f64::consts::PI / 6.0).cos();
        for k in 0..6 {
            let ang = (k as f64 + 0.5) / 6.0 * std::f64::consts::TAU;
            if x * ang.cos() + y * ang.sin() > inr + tol {
                return false;
            }
        }
        true
    }

    /// Containment slack for discrete trajectories: one cleanup step can land
    /// half an acceleration quantum outside the continuous envelope.
    pub fn containment_tol(&self, dt: f64) -> f64 {
        EPS_DYN + 0.5 * self.limits.a_max * dt * dt
    }

    /// The quantized approach run delivering `v0` exactly at `entry`: starts
    /// at a reduced axis-aligned speed (on the step grid) behind the mouth,
    /// accelerates at full thrust onto `v0`, then coasts through the gate.
    /// The reduced start speed is at most the per-axis cap, so a free-space
    /// connection can target the returned start state.
    pub fn approach(&self, entry: Vector<D>, dt: f64) -> (State<D>, Trajectory<D>) {
        let v = self.limits.v_max;
        let a = self.limits.a_max;
        let axis_v = self.limits.axis_v(D);
        let m = ((v - axis_v) / (a * dt)).ceil().max(1.0) as usize;
        let s = v - m as f64 * a * dt;
        let l_turn = s * (m as f64 * dt) + 0.5 * a * (m as f64 * dt) * (m as f64 * dt);
        let j = (((self.depth - l_turn) / (v * dt)).ceil().max(0.0)) as usize;
        let q_start = entry - self.dir * (l_turn + j as f64 * (v * dt));
        let start = State::new(q_start, self.dir * s);

        let full = self.dir * a;
        let mut samples = Vec::with_capacity(m + j + 1);
        samples.push(start.v);
        for _ in 0..m - 1 {
            samples.push(*samples.last().unwrap() + full * dt);
        }
        // The last burst step lands on v0 bit for bit by sampling it.
        samples.extend(std::iter::repeat(self.v0).take(j + 1));
        let traj = Trajectory::from_velocity_samples(start.p, dt, &samples);
        debug_assert_eq!(traj.last().v, self.v0);
        (start, traj)
    }
}

/// Rotate an arriving agent's velocity onto the bridge axis inside the
/// entrance: close the whole velocity gap with one full-thrust burst in the
/// fixed gap direction (plus one residual step that lands on `v0` exactly),
/// then coast up to the gate plane. Fails honestly when the arrival is
/// outside the region, moving away from the gate, or when the resulting
/// course leaves the region or misses the gate.
pub fn adjust_in_entrance<const D: usize>(
    entrance: &Entrance<D>,
    arrival: State<D>,
    dt: f64,
) -> Result<Adjusted<D>> {
    let limits = entrance.limits;
    let v = limits.v_max;
    let a = limits.a_max;
    if arrival.v.norm() > v * (1.0 + EPS_DYN) {
        return Err(Error::BadArrival {
            detail: format!("arrival speed {} exceeds the limit", arrival.v.norm()),
        });
    }
    if !entrance.contains(arrival.p, EPS_GEOM) {
        return Err(Error::BadArrival {
            detail: "arrival position outside the entrance region".into(),
        });
    }
    if arrival.v.dot(entrance.dir) < -EPS_DYN * v {
        return Err(Error::BadArrival {
            detail: "arrival velocity points away from the gate".into(),
        });
    }

    let gap = entrance.v0 - arrival.v;
    let gap_norm = gap.norm();
    let mut samples = vec![arrival.v];
    if gap_norm > 0.0 {
        let full = gap * (a / gap_norm);
        let m = (gap_norm / (a * dt)).floor() as usize;
        for _ in 0..m {
            samples.push(*samples.last().unwrap() + full * dt);
        }
        // The residual step targets v0 itself, so the turn ends on it bit
        // for bit.
        if *samples.last().unwrap() != entrance.v0 {
            samples.push(entrance.v0);
        }
    }
    let turn = Trajectory::from_velocity_samples(arrival.p, dt, &samples);
    let center = entrance.gate.center();
    let s_end = (turn.last().p - center).dot(entrance.dir);
    if s_end > EPS_GEOM {
        return Err(Error::BadArrival {
            detail: format!("velocity turn overruns the gate plane by {s_end:.6}"),
        });
    }

    let coast = ((-s_end) / (v * dt) + 1e-9).floor() as usize;
    samples.extend(std::iter::repeat(entrance.v0).take(coast));
    let trajectory = Trajectory::from_velocity_samples(arrival.p, dt, &samples);

    let ctol = entrance.containment_tol(dt);
    for w in trajectory.points() {
        if !entrance.contains(w.p, ctol) {
            return Err(Error::BadArrival {
                detail: format!("adjustment leaves the entrance region at {:?}", w.p.0),
            });
        }
    }

    let last = trajectory.last();
    let s_last = (last.p - center).dot(entrance.dir);
    let entry = last.p - entrance.dir * s_last;
    let tol = 1e-6 * (2.0 * entrance.halfwidth).max(1.0);
    if entrance.gate.weights(entry, tol).is_none() {
        return Err(Error::BadArrival {
            detail: "adjusted course misses the gate".into(),
        });
    }
    debug_assert_eq!(last.v, entrance.v0);
    Ok(Adjusted {
        trajectory,
        turn_time: gap_norm / a,
        entry,
    })
}

/// Entrance shape for a free-standing gate, used by tests and diagnostics.
pub fn standalone_entrance<const D: usize>(
    center: Vector<D>,
    dir: Vector<D>,
    halfwidth: f64,
    limits: &AgentLimits,
    obstacles: &ObstacleSet<D>,
) -> Result<Entrance<D>> {
    let gate = Gate {
        points: gate_points(center, dir, halfwidth),
        normal: dir,
    };
    Entrance::build(usize::MAX, &gate, dir, halfwidth, limits, obstacles)
}
