//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OfsError {
    #[error("matrix is not Hermitian (max entry deviation {max_dev:.3e})")]
    NonHermitianInput { max_dev: f64 },

    #[error("matrix is not unitary (max deviation of U\u{2020}U from identity {max_dev:.3e})")]
    NonUnitaryInput { max_dev: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("invalid density matrix: {reason}")]
    InvalidDensity { reason: String },

    #[error("invalid state weights: {reason}")]
    InvalidWeights { reason: String },

    #[error("state weights are not expressed in the eigenbasis of H(\u{3bb}) (residual {residual:.3e})")]
    WeightsBasisMismatch { residual: f64 },

    #[error("degenerate gap produced non-finite susceptibility terms between levels {n} and {m}")]
    DegenerateGap { n: usize, m: usize },

    #[error("ground state is degenerate (gap {gap:.3e})")]
    DegenerateGroundState { gap: f64 },

    #[error("quadrature did not converge: value {value:.12e}, relative residual {residual:.3e}")]
    QuadratureNonConverged { value: f64, residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),
}

pub type Result<T> = std::result::Result<T, OfsError>;
