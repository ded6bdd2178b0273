//! Scenario files: one TOML document fully describes a batch problem. Top
//! level keys are `dimension`, `bounds`, `limits`, the optional tuning knobs
//! `dt`, `delta_t`, `tau`, `seed`, and the `obstacles` / `agents` arrays.
//! Loading fills defaults, builds the typed obstacle set with the agent
//! radius baked in as inflation, and validates every invariant the pipeline
//! relies on, reporting violations by field path.

use serde::{Deserialize, Serialize};

use crate::dynamics::{travel_time, AgentLimits};
use crate::error::{Error, Result};
use crate::geom::{Obstacle, ObstacleSet};
use crate::vec::Vector;

/// Raw file form, exactly the TOML surface. Kept inside the typed scenario
/// (with defaults filled) so serialization round-trips to a fixed point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub dimension: usize,
    pub bounds: BoundsFile,
    pub limits: LimitsFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<ObstacleFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agents: Vec<AgentFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsFile {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsFile {
    pub radius: f64,
    pub v_max: f64,
    pub a_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObstacleFile {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Convex planar polygon (2-D scenarios only).
    Polygon { vertices: Vec<Vec<f64>> },
    /// Closed convex triangle mesh (3-D scenarios only).
    Mesh {
        vertices: Vec<Vec<f64>>,
        faces: Vec<[usize; 3]>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentFile {
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
}

/// A validated scenario with all defaults resolved.
#[derive(Clone, Debug)]
pub struct Scenario<const D: usize> {
    pub bounds: (Vector<D>, Vector<D>),
    pub limits: AgentLimits,
    pub dt: f64,
    /// Scheduling quantum; always a positive multiple of `dt`.
    pub delta_t: f64,
    pub tau: f64,
    pub seed: u64,
    /// Obstacles carry the agent radius as inflation, so all planning treats
    /// the agent as a point against them.
    pub obstacles: ObstacleSet<D>,
    /// (start, goal) per agent, both at rest.
    pub agents: Vec<(Vector<D>, Vector<D>)>,
    /// Normalised file form (defaults filled) for serialization.
    pub file: ScenarioFile,
}

/// Dimension-dispatched scenario: the file declares 2 or 3.
#[derive(Clone, Debug)]
pub enum Loaded {
    Planar(Scenario<2>),
    Spatial(Scenario<3>),
}

impl Loaded {
    pub fn dimension(&self) -> usize {
        match self {
            Loaded::Planar(_) => 2,
            Loaded::Spatial(_) => 3,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Loaded::Planar(s) => s.seed,
            Loaded::Spatial(s) => s.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Loaded::Planar(s) => {
                s.seed = seed;
                s.file.seed = Some(seed);
            }
            Loaded::Spatial(s) => {
                s.seed = seed;
                s.file.seed = Some(seed);
            }
        }
    }

    pub fn agent_count(&self) -> usize {
        match self {
            Loaded::Planar(s) => s.agents.len(),
            Loaded::Spatial(s) => s.agents.len(),
        }
    }

    pub fn to_toml(&self) -> String {
        match self {
            Loaded::Planar(s) => s.to_toml(),
            Loaded::Spatial(s) => s.to_toml(),
        }
    }
}

pub fn load_scenario(path: &std::path::Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text, &path.display().to_string())
}

pub fn parse_scenario(text: &str, origin: &str) -> Result<Loaded> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        detail: e.to_string(),
    })?;
    match file.dimension {
        2 => Ok(Loaded::Planar(Scenario::<2>::from_file(file)?)),
        3 => Ok(Loaded::Spatial(Scenario::<3>::from_file(file)?)),
        d => Err(Error::InvalidScenario(format!(
            "dimension: must be 2 or 3, got {d}"
        ))),
    }
}

fn vecd<const D: usize>(v: &[f64], path: &str) -> Result<Vector<D>> {
    if v.len() != D {
        return Err(Error::InvalidScenario(format!(
            "{path}: expected {D} components, got {}",
            v.len()
        )));
    }
    let mut out = Vector::ZERO;
    for i in 0..D {
        if !v[i].is_finite() {
            return Err(Error::InvalidScenario(format!(
                "{path}: component {i} is not finite"
            )));
        }
        out[i] = v[i];
    }
    Ok(out)
}

impl<const D: usize> Scenario<D> {
    pub fn from_file(mut file: ScenarioFile) -> Result<Self> {
        assert_eq!(file.dimension, D);
        let lim = &file.limits;
        for (name, v) in [
            ("limits.radius", lim.radius),
            ("limits.v_max", lim.v_max),
            ("limits.a_max", lim.a_max),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidScenario(format!("{name}: must be positive")));
            }
        }
        let limits = AgentLimits {
            radius: lim.radius,
            v_max: lim.v_max,
            a_max: lim.a_max,
        };
        let r = limits.radius;

        let lo = vecd::<D>(&file.bounds.lo, "bounds.lo")?;
        let hi = vecd::<D>(&file.bounds.hi, "bounds.hi")?;
        for i in 0..D {
            if !(hi[i] - lo[i] > 2.0 * r) {
                return Err(Error::InvalidScenario(format!(
                    "bounds: extent on axis {i} is {}, need more than one agent diameter {}",
                    hi[i] - lo[i],
                    2.0 * r
                )));
            }
        }

        // No-tunneling precondition for stepwise collision scans.
        let dt = file.dt.unwrap_or((0.05f64).min(r / (4.0 * limits.v_max)));
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidScenario("dt: must be positive".into()));
        }
        if limits.v_max * dt >= 0.5 * r {
            return Err(Error::InvalidScenario(format!(
                "dt: one step covers {} but must stay under half the radius {}",
                limits.v_max * dt,
                0.5 * r
            )));
        }

        let delta_t = match file.delta_t {
            Some(q) => {
                let steps = (q / dt).round();
                if !(q > 0.0) || steps < 1.0 || (q - steps * dt).abs() > 1e-9 * q {
                    return Err(Error::InvalidScenario(format!(
                        "delta_t: {q} is not a positive multiple of dt {dt}"
                    )));
                }
                q
            }
            // Roughly the time to clear one diameter at full speed.
            None => ((2.0 * r / limits.v_max / dt).round().max(1.0)) * dt,
        };

        // Generous horizon: corner-to-corner travel plus a full velocity turn.
        let tau = file.tau.unwrap_or_else(|| {
            travel_time(lo, hi, &limits) + 2.0 * limits.v_max / limits.a_max
        });
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidScenario("tau: must be positive".into()));
        }

        let seed = file.seed.unwrap_or(0);

        let mut obstacles = Vec::new();
        for (i, spec) in file.obstacles.iter().enumerate() {
            let obs = match spec {
                ObstacleFile::Box { lo, hi } => Obstacle::from_box(
                    i,
                    vecd::<D>(lo, &format!("obstacles[{i}].lo"))?,
                    vecd::<D>(hi, &format!("obstacles[{i}].hi"))?,
                    r,
                ),
                ObstacleFile::Polygon { vertices } => {
                    if D != 2 {
                        return Err(Error::InvalidScenario(format!(
                            "obstacles[{i}]: polygon obstacles require dimension 2"
                        )));
                    }
                    let mut verts = Vec::with_capacity(vertices.len());
                    for (j, v) in vertices.iter().enumerate() {
                        verts.push(vecd::<2>(v, &format!("obstacles[{i}].vertices[{j}]"))?);
                    }
                    Obstacle::convex_polygon(i, verts, r).map(cast_obstacle::<2, D>)
                }
                ObstacleFile::Mesh { vertices, faces } => {
                    if D != 3 {
                        return Err(Error::InvalidScenario(format!(
                            "obstacles[{i}]: mesh obstacles require dimension 3"
                        )));
                    }
                    let mut verts = Vec::with_capacity(vertices.len());
                    for (j, v) in vertices.iter().enumerate() {
                        verts.push(vecd::<3>(v, &format!("obstacles[{i}].vertices[{j}]"))?);
                    }
                    Obstacle::convex_mesh(i, verts, faces.clone(), r).map(cast_obstacle::<3, D>)
                }
            }
            .map_err(|e| Error::InvalidScenario(format!("obstacles[{i}]: {e}")))?;
            obstacles.push(obs);
        }
        let obstacles = ObstacleSet::new(obstacles);

        let mut agents = Vec::with_capacity(file.agents.len());
        for (i, a) in file.agents.iter().enumerate() {
            let start = vecd::<D>(&a.start, &format!("agents[{i}].start"))?;
            let goal = vecd::<D>(&a.goal, &format!("agents[{i}].goal"))?;
            agents.push((start, goal));
        }
        for (i, &(start, goal)) in agents.iter().enumerate() {
            for (which, p) in [("start", start), ("goal", goal)] {
                for axis in 0..D {
                    if p[axis] < lo[axis] + r || p[axis] > hi[axis] - r {
                        return Err(Error::InvalidScenario(format!(
                            "agents[{i}].{which}: within {r} of the workspace boundary on axis {axis}"
                        )));
                    }
                }
                if let Some(id) = obstacles.point_hits(p) {
                    return Err(Error::InvalidScenario(format!(
                        "agents[{i}].{which}: within {r} of obstacle {id}"
                    )));
                }
            }
        }
        // Parked agents must be able to coexist: the scheduler holds every
        // agent at its start before departure and at its goal after arrival.
        for i in 0..agents.len() {
            for j in i + 1..agents.len() {
                if agents[i].0.dist(agents[j].0) < 2.0 * r {
                    return Err(Error::InvalidScenario(format!(
                        "agents[{i}].start overlaps agents[{j}].start (distance {:.3} < {})",
                        agents[i].0.dist(agents[j].0),
                        2.0 * r
                    )));
                }
                if agents[i].1.dist(agents[j].1) < 2.0 * r {
                    return Err(Error::InvalidScenario(format!(
                        "agents[{i}].goal overlaps agents[{j}].goal (distance {:.3} < {})",
                        agents[i].1.dist(agents[j].1),
                        2.0 * r
                    )));
                }
            }
        }

        file.dt = Some(dt);
        file.delta_t = Some(delta_t);
        file.tau = Some(tau);
        file.seed = Some(seed);
        Ok(Scenario {
            bounds: (lo, hi),
            limits,
            dt,
            delta_t,
            tau,
            seed,
            obstacles,
            agents,
            file,
        })
    }

    /// Workspace shrunk by the agent radius: where the center may go.
    pub fn inner_bounds(&self) -> (Vector<D>, Vector<D>) {
        (
            self.bounds.0 + Vector::splat(self.limits.radius),
            self.bounds.1 - Vector::splat(self.limits.radius),
        )
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.file).expect("scenario files always serialize")
    }
}

fn relabel<const S: usize, const D: usize>(v: Vector<S>) -> Vector<D> {
    assert_eq!(S, D);
    let mut out = Vector::ZERO;
    for i in 0..D {
        out[i] = v[i];
    }
    out
}

/// The polygon and mesh constructors are inherently dimension-specific, but
/// the match arms above must share one type; the arm taken always has S == D.
fn cast_obstacle<const S: usize, const D: usize>(o: Obstacle<S>) -> Obstacle<D> {
    let vertices: Vec<Vector<D>> = o.vertices.iter().map(|&v| relabel(v)).collect();
    let aabb = crate::geom::Aabb::of_points(&vertices).inflate(o.inflation);
    Obstacle {
        id: o.id,
        vertices,
        faces: o.faces,
        inflation: o.inflation,
        aabb,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corridor_text() -> String {
        r#"
dimension = 2
bounds = { lo = [0.0, 0.0], hi = [100.0, 60.0] }
limits = { radius = 2.0, v_max = 3.0, a_max = 2.0 }
dt = 0.05
seed = 9

[[obstacles]]
kind = "box"
lo = [40.0, 0.0]
hi = [44.0, 25.0]

[[obstacles]]
kind = "polygon"
vertices = [[40.0, 35.0], [44.0, 35.0], [44.0, 60.0], [40.0, 60.0]]

[[agents]]
start = [10.0, 30.0]
goal = [90.0, 30.0]

[[agents]]
start = [10.0, 40.0]
goal = [90.0, 40.0]
"#
        .to_string()
    }

    #[test]
    fn loads_fills_defaults_and_round_trips() {
        let loaded = parse_scenario(&corridor_text(), "test").unwrap();
        let Loaded::Planar(s) = &loaded else {
            panic!("expected a planar scenario")
        };
        assert_eq!(s.agents.len(), 2);
        assert_eq!(s.obstacles.obstacles.len(), 2);
        assert_eq!(s.seed, 9);
        assert_eq!(s.dt, 0.05);
        // Defaults resolved: quantum on the grid, horizon positive.
        let q = s.delta_t / s.dt;
        assert!((q - q.round()).abs() < 1e-9 && q >= 1.0);
        assert!(s.tau > 0.0);
        assert_eq!(s.obstacles.obstacles[0].inflation, 2.0);

        // Serialization is a fixed point after one normalisation pass.
        let once = loaded.to_toml();
        let again = parse_scenario(&once, "round").unwrap().to_toml();
        assert_eq!(once, again);
        let Loaded::Planar(s2) = parse_scenario(&once, "round").unwrap() else {
            panic!()
        };
        assert_eq!(s.file, s2.file);
    }

    #[test]
    fn rejects_overlapping_starts_naming_both_agents() {
        let text = corridor_text().replace("start = [10.0, 40.0]", "start = [11.0, 30.5]");
        let err = parse_scenario(&text, "test").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("agents[0]") && msg.contains("agents[1]"), "{msg}");
    }

    #[test]
    fn rejects_tunneling_time_step() {
        let text = corridor_text().replace("dt = 0.05", "dt = 0.5");
        let err = parse_scenario(&text, "test").unwrap_err();
        assert!(err.to_string().contains("dt"), "{err}");
    }

    #[test]
    fn rejects_mismatched_obstacle_kind_and_agent_in_wall() {
        let text = corridor_text().replace(
            "kind = \"polygon\"\nvertices = [[40.0, 35.0], [44.0, 35.0], [44.0, 60.0], [40.0, 60.0]]",
            "kind = \"mesh\"\nvertices = [[40.0, 35.0, 0.0]]\nfaces = []",
        );
        let err = parse_scenario(&text, "test").unwrap_err();
        assert!(err.to_string().contains("obstacles[1]"), "{err}");

        let text = corridor_text().replace("start = [10.0, 30.0]", "start = [41.0, 20.0]");
        let err = parse_scenario(&text, "test").unwrap_err();
        assert!(err.to_string().contains("agents[0].start"), "{err}");
    }

    #[test]
    fn quantum_off_grid_is_rejected() {
        let text = corridor_text().replace("dt = 0.05", "dt = 0.05\ndelta_t = 0.07");
        let err = parse_scenario(&text, "test").unwrap_err();
        assert!(err.to_string().contains("delta_t"), "{err}");
    }

    #[test]
    fn spatial_scenario_loads() {
        let text = r#"
dimension = 3
bounds = { lo = [0.0, 0.0, 0.0], hi = [60.0, 40.0, 40.0] }
limits = { radius = 2.0, v_max = 2.0, a_max = 1.0 }

[[agents]]
start = [5.0, 20.0, 20.0]
goal = [55.0, 20.0, 20.0]
"#;
        let loaded = parse_scenario(text, "test").unwrap();
        assert_eq!(loaded.dimension(), 3);
        assert_eq!(loaded.agent_count(), 1);
    }
}
