use thiserror::Error;

/// Errors produced by construction and computation on graphon-signals.
#[derive(Debug, Error)]
pub enum Error {
    /// A value violated a domain invariant (range, symmetry, bound).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Two objects that must share a grid resolution do not.
    #[error("resolution mismatch: {left} vs {right}")]
    ResolutionMismatch { left: usize, right: usize },

    /// Feature/channel dimensions do not chain.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Exact (exhaustive) computation refused above the configured limit.
    #[error(
        "resolution {resolution} exceeds the exhaustive limit {limit}; use the heuristic variant"
    )]
    ResolutionTooLarge { resolution: usize, limit: usize },

    /// Resolution change where neither resolution divides the other.
    #[error("incompatible resolutions: cannot resample {from} to {to} (neither divides the other)")]
    IncompatibleResolutions { from: usize, to: usize },

    /// A bound calculator was asked for data the network spec does not carry.
    #[error("missing bound data: {0}")]
    MissingBoundData(String),

    /// A calculator target lies outside the attainable image.
    #[error("target out of range: {0}")]
    TargetOutOfRange(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
