use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polynomial degree {0} (must be at least 1)")]
    InvalidDegree(usize),

    #[error("index {index} out of range for {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("point {0:?} lies outside the reference element")]
    OutsideReference(Vec<f64>),

    #[error("invalid mesh input: {0}")]
    InvalidInput(String),

    #[error("mesh parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("inverted element {element}: Jacobian determinant {det_j:e}")]
    InvertedElement { element: usize, det_j: f64 },

    #[error("face classification failed: {0}")]
    Classification(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("point {0:?} is not inside the domain")]
    PointOutsideDomain([f64; 3]),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("invalid material: {0}")]
    Material(String),

    #[error("simulation diverged at step {step} (t = {time:e})")]
    Divergence { step: usize, time: f64 },

    #[error("no root of the dispersion relation in ({lo}, {hi})")]
    NoRoot { lo: f64, hi: f64 },

    #[error("convergence fit: {0}")]
    Fit(String),

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::MeshParse { .. } | Error::InvalidInput(_) => 2,
            Error::InvertedElement { .. }
            | Error::Classification(_)
            | Error::UnsupportedGeometry(_)
            | Error::PointOutsideDomain(_)
            | Error::OutsideReference(_) => 3,
            Error::Divergence { .. } => 4,
            Error::Io { .. } => 5,
            _ => 1,
        }
    }
}
