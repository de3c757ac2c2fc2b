use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = MepError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MepError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid multiindex {index:?} for dimensions {dims:?}")]
    InvalidMultiindex { index: Vec<usize>, dims: Vec<usize> },

    #[error("matrix A[{k}][{l}] is not Hermitian (deviation {deviation:e})")]
    NotHermitian { k: usize, l: usize, deviation: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("eigendecomposition failed: {0}")]
    EigenDecomposition(String),

    #[error("spectrum is not real (imaginary part {imag:e} exceeds {tol:e})")]
    ComplexSpectrum { imag: f64, tol: f64 },

    #[error("eigenvalue is defective (|w^H v| = {overlap:e})")]
    DefectiveEigenvalue { overlap: f64 },

    #[error("Newton system is singular (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("W matrix is rank deficient (second smallest singular value {sigma:e})")]
    RankDeficient { sigma: f64 },

    #[error("damping failed to decrease the residual after {rounds} rounds")]
    StallDetected { rounds: usize },

    #[error("operator determinants do not commute (defect {defect:e})")]
    NonCommuting { defect: f64 },

    #[error("operator determinant is singular")]
    SingularDelta,

    #[error("tensor space of dimension {size} exceeds the oracle limit {limit}")]
    OracleTooLarge { size: usize, limit: usize },

    #[error("transformation matrix for equation {k} is singular (condition estimate {condition:e})")]
    SingularTransform { k: usize, condition: f64 },

    #[error("diagonal scaling does not symmetrize A[{k}][{l}] (deviation {deviation:e})")]
    NotSymmetrizable { k: usize, l: usize, deviation: f64 },

    #[error("malformed problem file: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<MepError>,
    },
}

impl MepError {
    /// Machine-readable name of the error kind, with any iteration context stripped.
    pub fn name(&self) -> &'static str {
        match self {
            MepError::DimensionMismatch(_) => "DimensionMismatch",
            MepError::InvalidMultiindex { .. } => "InvalidMultiindex",
            MepError::NotHermitian { .. } => "NotHermitian",
            MepError::InvalidConfig(_) => "InvalidConfig",
            MepError::EigenDecomposition(_) => "EigenDecomposition",
            MepError::ComplexSpectrum { .. } => "ComplexSpectrum",
            MepError::DefectiveEigenvalue { .. } => "DefectiveEigenvalue",
            MepError::SingularJacobian { .. } => "SingularJacobian",
            MepError::RankDeficient { .. } => "RankDeficient",
            MepError::StallDetected { .. } => "StallDetected",
            MepError::NonCommuting { .. } => "NonCommuting",
            MepError::SingularDelta => "SingularDelta",
            MepError::OracleTooLarge { .. } => "OracleTooLarge",
            MepError::SingularTransform { .. } => "SingularTransform",
            MepError::NotSymmetrizable { .. } => "NotSymmetrizable",
            MepError::Format(_) => "Format",
            MepError::Io { .. } => "Io",
            MepError::AtIteration { source, .. } => source.name(),
        }
    }

    /// The innermost error, skipping iteration context.
    pub fn kind(&self) -> &MepError {
        match self {
            MepError::AtIteration { source, .. } => source.kind(),
            other => other,
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> MepError {
        MepError::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}
