//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {got} outside supported range {min}..={max}")]
    QubitCount { got: usize, min: usize, max: usize },

    #[error("parameter vector has length {got}, circuit expects {expected}")]
    ParamArity { got: usize, expected: usize },

    #[error("parametric gate {kind} applied without an angle")]
    MissingParameter { kind: &'static str },

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("outcome `{outcome}` does not address a {n_qubits}-qubit register")]
    Outcome { outcome: String, n_qubits: usize },

    #[error("ansatz kind {kind} is not valid for {builder}")]
    AnsatzKind { kind: &'static str, builder: &'static str },

    #[error("circuit carries parameters but no layer structure")]
    Unlayered,

    #[error("metric blocks do not cover all {expected} parameter slots")]
    MetricCoverage { expected: usize },

    #[error("readout error rate {0} outside [0, 0.5)")]
    ErrorRate(f64),

    #[error("calibration matrix is singular or ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("least-squares fit needs at least {needed} points, got {got}")]
    FitPoints { needed: usize, got: usize },

    #[error("adjoint is only defined for parameter-free circuits")]
    AdjointParametric,

    #[error("dense representation limited to {max} qubits, requested {got}")]
    DenseSize { got: usize, max: usize },

    #[error("cannot serialize gate kind {0} to the line format")]
    Unserializable(&'static str),

    #[error("malformed circuit line `{0}`")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
