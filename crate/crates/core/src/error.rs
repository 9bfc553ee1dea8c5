use thiserror::Error;

/// Errors raised by the simulation, tomography and readout routines.
#[derive(Debug, Error)]
pub enum NlreError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("truncation breach: population {population:.3e} in the top {levels} levels exceeds {threshold:.1e}")]
    TruncationBreach {
        population: f64,
        levels: usize,
        threshold: f64,
    },

    #[error("coupling node at n = {n}: ratio undefined")]
    CouplingNode { n: usize },

    #[error("no stabilizing crossing: {0}")]
    NoCrossing(String),

    #[error("kernel dimension {found} differs from expected {expected}")]
    KernelDimension { found: usize, expected: usize },

    #[error("steady state not reached within t = {time:.3e} (residual {residual:.3e})")]
    NotConverged { time: f64, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("rank-deficient fit: {0}")]
    RankDeficient(String),

    #[error("incommensurable coupling: {0}")]
    Incommensurable(String),

    #[error("record format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NlreError>;
