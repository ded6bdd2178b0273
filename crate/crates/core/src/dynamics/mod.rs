//! Double-integrator dynamics. Agents are points with position and velocity;
//! per step `i` of length `dt` they apply one acceleration and move by
//!
//! ```text
//! p[i+1] = p[i] + v[i] dt + a[i] dt^2 / 2,    v[i+1] = v[i] + a[i] dt
//! ```
//!
//! Every trajectory in the crate is built by evaluating exactly these two
//! expressions, so the update identity holds to the last bit and validation
//! is a genuine invariant check rather than a tolerance negotiation.

mod connect;
mod profile;

pub use connect::{axis_reach, optimal_connect, travel_time};
pub use profile::{min_time_1d, solve_fixed_steps};

use crate::consts::EPS_DYN;
use crate::error::{Error, Result};
use crate::vec::Vector;
use serde::{Deserialize, Serialize};

/// Shared kinodynamic envelope: all agents are discs/spheres of one radius
/// with one speed and acceleration bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentLimits {
    pub radius: f64,
    pub v_max: f64,
    pub a_max: f64,
}

impl AgentLimits {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("radius", self.radius),
            ("v_max", self.v_max),
            ("a_max", self.a_max),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidScenario(format!(
                    "limit {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Per-axis speed cap `v_max / sqrt(D)`. A trajectory obeying the
    /// per-axis caps on every axis obeys the Euclidean bounds.
    pub fn axis_v(&self, dim: usize) -> f64 {
        self.v_max / (dim as f64).sqrt()
    }

    pub fn axis_a(&self, dim: usize) -> f64 {
        self.a_max / (dim as f64).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct State<const D: usize> {
    pub p: Vector<D>,
    pub v: Vector<D>,
}

impl<const D: usize> State<D> {
    pub fn new(p: Vector<D>, v: Vector<D>) -> Self {
        State { p, v }
    }

    pub fn at_rest(p: Vector<D>) -> Self {
        State {
            p,
            v: Vector::ZERO,
        }
    }
}

/// One discrete step of the double integrator.
pub fn integrate_step<const D: usize>(s: State<D>, a: Vector<D>, dt: f64) -> State<D> {
    State {
        p: s.p + s.v * dt + a * (0.5 * dt * dt),
        v: s.v + a * dt,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WayPoint<const D: usize> {
    pub p: Vector<D>,
    pub v: Vector<D>,
    /// Acceleration applied over the step starting here; zero on the final
    /// waypoint.
    pub a: Vector<D>,
}

/// A uniformly sampled trajectory. Never empty: a single waypoint encodes a
/// zero-duration stay.
#[derive(Clone, Debug)]
pub struct Trajectory<const D: usize> {
    dt: f64,
    points: Vec<WayPoint<D>>,
}

impl<const D: usize> Trajectory<D> {
    pub fn single(state: State<D>, dt: f64) -> Self {
        Trajectory {
            dt,
            points: vec![WayPoint {
                p: state.p,
                v: state.v,
                a: Vector::ZERO,
            }],
        }
    }

    /// Integrate an acceleration sequence from `start`.
    pub fn from_accels(start: State<D>, dt: f64, accels: &[Vector<D>]) -> Self {
        let mut points = Vec::with_capacity(accels.len() + 1);
        let mut s = start;
        for &a in accels {
            points.push(WayPoint { p: s.p, v: s.v, a });
            s = integrate_step(s, a, dt);
        }
        points.push(WayPoint {
            p: s.p,
            v: s.v,
            a: Vector::ZERO,
        });
        Trajectory { dt, points }
    }

    /// Build from velocity samples: positions follow from the update identity,
    /// accelerations are the per-step velocity differences. The waypoint
    /// velocities are the samples bit for bit, so that callers solving for an
    /// exact terminal velocity keep it exactly.
    pub fn from_velocity_samples(p0: Vector<D>, dt: f64, samples: &[Vector<D>]) -> Self {
        assert!(!samples.is_empty());
        let mut points = Vec::with_capacity(samples.len());
        let mut p = p0;
        for i in 0..samples.len() {
            let v = samples[i];
            let a = if i + 1 < samples.len() {
                (samples[i + 1] - v) / dt
            } else {
                Vector::ZERO
            };
            points.push(WayPoint { p, v, a });
            if i + 1 < samples.len() {
                p = p + v * dt + a * (0.5 * dt * dt);
            }
        }
        Trajectory { dt, points }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of waypoints (steps + 1).
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn duration(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn point(&self, i: usize) -> &WayPoint<D> {
        &self.points[i]
    }

    pub fn points(&self) -> &[WayPoint<D>] {
        &self.points
    }

    pub fn first(&self) -> State<D> {
        let w = self.points[0];
        State { p: w.p, v: w.v }
    }

    pub fn last(&self) -> State<D> {
        let w = *self.points.last().unwrap();
        State { p: w.p, v: w.v }
    }

    pub fn positions(&self) -> Vec<Vector<D>> {
        self.points.iter().map(|w| w.p).collect()
    }

    /// Append `other`, which must start where `self` ends (same position and
    /// velocity within `tol`, same dt). The junction waypoint is taken from
    /// `other`; its acceleration is `other`'s first step.
    pub fn concat(mut self, other: &Trajectory<D>, tol: f64) -> Result<Self> {
        if self.dt != other.dt {
            return Err(Error::JunctionMismatch {
                step: self.steps(),
                detail: format!("dt {} vs {}", self.dt, other.dt),
            });
        }
        let a = self.last();
        let b = other.first();
        let dp = a.p.dist(b.p);
        let dv = a.v.dist(b.v);
        if dp > tol || dv > tol {
            return Err(Error::JunctionMismatch {
                step: self.steps(),
                detail: format!("position gap {dp:.3e}, velocity gap {dv:.3e} exceed {tol:.1e}"),
            });
        }
        self.points.pop();
        self.points.extend_from_slice(&other.points);
        Ok(self)
    }

    /// Hold the final state for `steps` more steps.
    pub fn pad_rest(&mut self, steps: usize) {
        let mut w = *self.points.last().unwrap();
        w.a = Vector::ZERO;
        for _ in 0..steps {
            self.points.push(w);
        }
    }

    /// Drop the trailing waypoints where the agent has already come to rest
    /// at the final position (speed and distance to the last waypoint both
    /// within `tol`). Keeps the first such waypoint so the trajectory still
    /// ends at the same state.
    pub fn trim_rest(&mut self, tol: f64) {
        let last = *self.points.last().unwrap();
        let mut end = self.points.len() - 1;
        while end > 0 {
            let w = &self.points[end - 1];
            if w.v.norm() > tol || w.p.dist(last.p) > tol {
                break;
            }
            end -= 1;
        }
        self.points.truncate(end + 1);
        let w = self.points.last_mut().unwrap();
        w.a = Vector::ZERO;
    }

    /// Interior extreme positions inside step `i`: for each axis whose
    /// velocity changes sign mid-step, the position at the sign change. These
    /// are the candidates for maximal excursion between waypoints.
    pub fn segment_extremes(&self, i: usize) -> Vec<Vector<D>> {
        let w = &self.points[i];
        let mut out = Vec::new();
        if i + 1 >= self.points.len() {
            return out;
        }
        for axis in 0..D {
            let v = w.v[axis];
            let a = w.a[axis];
            if a == 0.0 {
                continue;
            }
            let t = -v / a;
            if t > 0.0 && t < self.dt {
                out.push(w.p + w.v * t + w.a * (0.5 * t * t));
            }
        }
        out
    }

    pub fn validate(&self, limits: &AgentLimits) -> ValidationReport {
        let mut violations = Vec::new();
        let v_cap = limits.v_max * (1.0 + EPS_DYN);
        let a_cap = limits.a_max * (1.0 + EPS_DYN);
        for (i, w) in self.points.iter().enumerate() {
            let vn = w.v.norm();
            if vn > v_cap {
                violations.push(Violation {
                    step: i,
                    kind: ViolationKind::Velocity,
                    magnitude: vn - limits.v_max,
                });
            }
            let an = w.a.norm();
            if an > a_cap {
                violations.push(Violation {
                    step: i,
                    kind: ViolationKind::Acceleration,
                    magnitude: an - limits.a_max,
                });
            }
            if i + 1 < self.points.len() {
                let predicted = integrate_step(State { p: w.p, v: w.v }, w.a, self.dt);
                let next = &self.points[i + 1];
                let dp = predicted.p.dist(next.p);
                if dp > 1e-9 {
                    violations.push(Violation {
                        step: i,
                        kind: ViolationKind::PositionIdentity,
                        magnitude: dp,
                    });
                }
                let dv = predicted.v.dist(next.v);
                if dv > 1e-9 {
                    violations.push(Violation {
                        step: i,
                        kind: ViolationKind::VelocityIdentity,
                        magnitude: dv,
                    });
                }
            }
        }
        ValidationReport { violations }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Velocity,
    Acceleration,
    PositionIdentity,
    VelocityIdentity,
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub step: usize,
    pub kind: ViolationKind,
    pub magnitude: f64,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}
