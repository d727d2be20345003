use thiserror::Error;

/// Errors produced by validation and construction across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("entry count {len} does not match {rows}x{cols}")]
    BadEntryCount { rows: usize, cols: usize, len: usize },

    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },

    #[error("not Hermitian: max |A - A\u{2020}| = {deviation:.3e} exceeds tol {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("not positive semi-definite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is {trace:.12}, expected 1 within tol {tol:.3e}")]
    BadTrace { trace: f64, tol: f64 },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("effect is not rank-1 (rank {rank})")]
    NotRankOne { rank: usize },

    #[error("count mismatch: {what} has {got} entries, expected {expected}")]
    CountMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid sharp observable: {0}")]
    InvalidObservable(String),

    #[error("observable has {available} eigenvalues but the refinement needs {needed}")]
    InsufficientEigenvalues { needed: usize, available: usize },

    #[error("isometry check failed: |V\u{2020}V - I| = {residual:.3e}")]
    IsometryCheck { residual: f64 },

    #[error("Kraus operators are not trace-preserving: |\u{3a3}K\u{2020}K - I| = {residual:.3e}")]
    NotTracePreserving { residual: f64 },

    #[error("unknown outcome label `{0}`")]
    UnknownOutcome(String),

    #[error("outcome index {index} out of range ({count} outcomes)")]
    OutcomeIndex { index: usize, count: usize },

    #[error("conditioning on a zero-probability branch (p = {probability:.3e}) at step {step}")]
    ZeroProbabilityBranch { probability: f64, step: usize },

    #[error("generator does not commute with I\u{2297}M_{outcome}: |[G, I\u{2297}M]| = {residual:.3e}")]
    CommutantViolation { outcome: usize, residual: f64 },

    #[error("discretized state normalizes to {norm:.6} (grid too coarse or narrow)")]
    NormalizationFailure { norm: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
