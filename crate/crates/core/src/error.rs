use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("point with norm {norm} lies outside the ball of radius {radius}")]
    OutsideBall { norm: f64, radius: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("training requires at least {required} classes, found {found}")]
    TooFewClasses { required: usize, found: usize },

    #[error("solver did not converge within {iterations} iterations (max KKT violation {violation:e})")]
    NotConverged { iterations: usize, violation: f64 },

    #[error("composition {method} requires poincare-flavor embeddings")]
    FlavorMismatch { method: String },

    #[error("{}: {malformed} of {total} lines malformed, above the {limit} fraction limit", .path.display())]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
        limit: f64,
    },

    #[error("class {class} has {members} members, fewer than {folds} folds")]
    ClassTooSmall {
        class: usize,
        members: usize,
        folds: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
