use thiserror::Error;

/// Errors produced by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite or out-of-range input: {0}")]
    InvalidInput(String),

    #[error("inductance matrix has {count} near-zero eigenvalues, expected exactly one")]
    MoreThanOneZeroMode { count: usize },

    #[error("charge truncation m_max = {m_max} too small for band {band} (energy {energy:.6} vs boundary {boundary:.6})")]
    TruncationTooSmall {
        m_max: usize,
        band: usize,
        energy: f64,
        boundary: f64,
    },

    #[error("basis tag encoding overflows the integer range (radix product too large)")]
    CapacityOverflow,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigensolver failed to converge: {found} of {wanted} pairs after {iterations} iterations (worst residual {residual:.3e})")]
    NotConverged {
        wanted: usize,
        found: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("solver failure at grid point {context}: {source}")]
    AtGridPoint {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("branches do not intersect on the grid for mode {mode}")]
    NoCrossing { mode: usize },

    #[error("ground state missing from the supplied eigenpairs")]
    GroundMissing,

    #[error("configuration error for `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach sweep grid-point context to a solver error.
    pub fn at(self, context: impl Into<String>) -> Error {
        Error::AtGridPoint {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
