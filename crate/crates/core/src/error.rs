//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver library and the CLI front end.
#[derive(Debug, Error)]
pub enum GibcError {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A degree or value exceeds the representable or supported range.
    #[error("range error: {0}")]
    Range(String),

    /// Inconsistent parameters between two objects (radius, index set, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("assembly error on face {face}: {reason}")]
    Assembly { face: usize, reason: String },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    /// A per-mode system is numerically singular.
    #[error("mode resonance at degree n = {n} for model {model}")]
    Resonance { n: usize, model: String },

    #[error("decomposition failure at degree n = {n}: A_S multiplier vanishes")]
    Decomposition { n: usize },

    #[error("quadrature under-resolved: {0}")]
    Quadrature(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GibcError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GibcError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, GibcError>;
