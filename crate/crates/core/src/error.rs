//! Crate-wide error type. Failures are explicit values, never panics, and
//! carry enough context to identify the failing entity.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A two-point boundary connection was requested with an endpoint
    /// velocity outside the per-axis envelope, or no feasible profile exists.
    #[error("connect infeasible: {0}")]
    ConnectInfeasible(String),

    #[error("trajectory junction discontinuous at step {step}: {detail}")]
    JunctionMismatch { step: usize, detail: String },

    #[error("planner start state blocked or out of bounds ({context})")]
    PlannerStartBlocked { context: String },

    #[error("planner exhausted {iterations} iterations ({context})")]
    PlannerExhausted { iterations: usize, context: String },

    #[error("bridge {bridge}: entry point off the start gate ({detail})")]
    OffGate { bridge: usize, detail: String },

    #[error("bridge {bridge}: entrance region intersects obstacle {obstacle}")]
    EntranceBlocked { bridge: usize, obstacle: usize },

    #[error("bridge construction between {from:?} and {to:?} failed: {detail}")]
    BridgeFailed {
        from: Vec<f64>,
        to: Vec<f64>,
        detail: String,
    },

    #[error("arrival state not admissible for entrance ({detail})")]
    BadArrival { detail: String },

    #[error("agent {agent}: no start delay below {cap_steps} steps resolves all conflicts")]
    Unschedulable { agent: usize, cap_steps: usize },

    #[error("agent {agent}: {detail}")]
    AgentFailed { agent: usize, detail: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {detail}")]
    Parse { path: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
