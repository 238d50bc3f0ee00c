//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("derivative order {requested} unavailable (max {available})")]
    DerivativeOrder { requested: usize, available: usize },

    #[error("forcing term invalid: {0}")]
    InvalidForcing(String),

    #[error("Ermakov amplitude collapsed (rho -> 0) near t = {t}")]
    Singularity { t: f64 },

    #[error("integrator step size underflow near t = {t} (eps = {eps})")]
    Convergence { t: f64, eps: f64 },

    #[error("finite-difference differentiation failed: {0}")]
    FiniteDifference(String),

    #[error("optimization window not covered by electrode array: {0}")]
    Coverage(String),

    #[error("non-confining potential: omega^2 = {omega_sq} <= 0")]
    NonConfining { omega_sq: f64 },

    #[error("matrix is numerically singular ({0}); discrete ill-posed systems need nu > 0")]
    SingularSystem(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
