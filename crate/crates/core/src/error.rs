//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by construction, validation, and numerical routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix entries must be finite")]
    NonFiniteEntry,

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("norm order must satisfy p >= 1, got {0}")]
    InvalidNormOrder(f64),

    #[error("{what} requires p {requirement}, got {p}")]
    UnsupportedNormOrder {
        what: &'static str,
        requirement: &'static str,
        p: f64,
    },

    #[error("map is not trace-preserving (deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("map is not positivity-preserving (image radius {radius:.12})")]
    NotPositivityPreserving { radius: f64 },

    #[error("map is not completely positive (min Choi eigenvalue {min_eigenvalue:.3e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("matrix is not a rotation: {reason}")]
    NotRotation { reason: String },

    #[error("state vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("parameter {name} = {value} outside valid range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("map is not a member of C_r (image radius {radius:.12} > r = {r})")]
    NotInRadiusClass { radius: f64, r: f64 },

    #[error("decomposition budget exhausted, best residual {residual:.3e} (target {target:.3e})")]
    DecompositionBudget { residual: f64, target: f64 },

    #[error("bracket [{lo}, {hi}] does not straddle a sign change")]
    BracketSignChange { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
