use thiserror::Error;

use crate::C64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is numerically singular (smallest pivot {pivot:e}, scale {scale:e})")]
    SingularMatrix { pivot: f64, scale: f64 },

    #[error("matrix has no nonzero singular values")]
    EmptySpectrum,

    #[error("eigenvalue iteration failed to converge ({unconverged} unconverged)")]
    NoConvergence { unconverged: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("sampling points {first} and {second} coincide")]
    DuplicatePoints { first: usize, second: usize },

    #[error("barycentric weight {index} has magnitude {magnitude:e} outside the representable range")]
    Overflow { index: usize, magnitude: f64 },

    #[error("evaluation point coincides with sampling point {index}")]
    PointCollision { index: usize },

    #[error("{z} is a singular or branch point of the problem")]
    SingularPoint { z: C64 },

    #[error("moment order too high: 2K = {twice_k} exceeds N = {n}")]
    OrderTooHigh { twice_k: usize, n: usize },

    #[error("truncated subspace is empty")]
    RankCollapse,

    #[error("Chebyshev interpolant of degree {degree} has validation error {error:e}")]
    InterpolationInaccurate { degree: usize, error: f64 },

    #[error("first stage returned no eigenvalues inside the region")]
    Stage1Empty,

    #[error("zero vector")]
    ZeroVector,

    #[error("all sampling points failed to solve")]
    AllSolvesFailed,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}{}: {message}", field.as_ref().map(|f| format!(" (field `{f}`)")).unwrap_or_default())]
    Parse {
        line: usize,
        field: Option<String>,
        message: String,
    },

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("Matrix Market format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("unknown scalar function family `{0}`")]
    UnknownFunctionFamily(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: msg.into(),
        }
    }

    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
