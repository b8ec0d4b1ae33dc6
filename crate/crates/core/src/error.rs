use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the matching pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("face {face} has zero area")]
    DegenerateFace { face: usize },

    #[error("face {face} has {count} vertices, expected 3")]
    NonTriangle { face: usize, count: usize },

    #[error("face {face} references vertex {index} but the mesh has {n_vertices} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        n_vertices: usize,
    },

    #[error("map entry {position} is {index} but the target has {n_target} vertices")]
    MapIndexOutOfRange {
        position: usize,
        index: usize,
        n_target: usize,
    },

    #[error("edge ({a}, {b}) is not manifold or is wound inconsistently")]
    InconsistentWinding { a: usize, b: usize },

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{count} vertices are unreachable from vertex {source_vertex}")]
    DisconnectedVertex { source_vertex: usize, count: usize },

    #[error("cotangent weight {weight:e} on face {face} exceeds the degeneracy limit")]
    NumericalDegeneracy { face: usize, weight: f64 },

    #[error("eigensolver converged {converged} of {requested} eigenpairs")]
    ConvergenceFailure { converged: usize, requested: usize },

    #[error("{needed} eigenpairs required but the basis holds {available}")]
    InsufficientBasis { needed: usize, available: usize },

    #[error("normal system is singular even after regularization")]
    SingularSystem,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::DegenerateFace { .. } => "DegenerateFace",
            Error::NonTriangle { .. } => "NonTriangle",
            Error::IndexOutOfRange { .. } | Error::MapIndexOutOfRange { .. } => "IndexOutOfRange",
            Error::InconsistentWinding { .. } => "InconsistentWinding",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::DisconnectedVertex { .. } => "DisconnectedVertex",
            Error::NumericalDegeneracy { .. } => "NumericalDegeneracy",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::InsufficientBasis { .. } => "InsufficientBasis",
            Error::SingularSystem => "SingularSystem",
            Error::Config(_) => "ConfigError",
            Error::Io { .. } => "IoError",
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalDegeneracy { .. }
                | Error::ConvergenceFailure { .. }
                | Error::SingularSystem
        )
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
