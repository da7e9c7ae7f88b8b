//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate element {element}: measure {measure:e}")]
    DegenerateElement { element: usize, measure: f64 },

    #[error("model construction: {0}")]
    ModelConstruction(String),

    /// The coefficient matrix failed positive definiteness at a sampled
    /// point of the admissibility grid.
    #[error("ellipticity violation at z={z}, x={x:?}: minimum eigenvalue {eig_min:e} <= 0")]
    EllipticityViolation { z: f64, x: Vec<f64>, eig_min: f64 },

    #[error("value {value} at node {node} outside admissible range [{t_min}, {t_max}]")]
    RangeViolation {
        node: usize,
        value: f64,
        t_min: f64,
        t_max: f64,
    },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// Pre-clamp overshoot of the frozen-coefficient solution exceeded the
    /// configured tolerance under the reject policy.
    #[error("maximum principle violation {violation:e} exceeds tolerance {tol:e}")]
    MaxPrincipleViolation { violation: f64, tol: f64 },

    #[error("oracle domain: target {target} outside attainable range [{lo}, {hi}]")]
    OracleDomain { target: f64, lo: f64, hi: f64 },

    #[error("experiment: {0}")]
    Experiment(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
