use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the decomposition library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("complex matrix violates adjoint block structure (deviation {deviation:e})")]
    AdjointStructure { deviation: f64 },

    #[error("factor columns are not orthonormal (drift {drift:e})")]
    FactorNotUnitary { drift: f64 },

    #[error("saliency needs at least 2 frames, got {0}")]
    InsufficientFrames(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no decodable frames in {}", .0.display())]
    NoFrames(PathBuf),

    #[error("failed to decode {}: {source}", path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("failed to write {}: {source}", path.display())]
    Encode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical check failed: {0}")]
    Numeric(String),

    #[error("image too small: {0}")]
    Size(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(op: &'static str, expected: (usize, usize), got: (usize, usize)) -> Error {
    Error::Shape {
        op,
        expected: format!("{}x{}", expected.0, expected.1),
        got: format!("{}x{}", got.0, got.1),
    }
}
