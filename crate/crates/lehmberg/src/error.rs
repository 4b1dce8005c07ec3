use thiserror::Error;

/// Errors raised by model construction, numerics and the runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    #[error("capacity exceeded: {what} requires {required}, limit is {limit}")]
    Capacity {
        what: &'static str,
        required: usize,
        limit: usize,
    },

    #[error("emitters {first} and {second} overlap (zero separation)")]
    Overlap { first: usize, second: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("rotating frame leaves transition ({lower},{upper}) oscillating at {residual:.6e}")]
    Frame {
        lower: usize,
        upper: usize,
        residual: f64,
    },

    #[error("generator construction left an imaginary residue of {residue:.3e}")]
    Construction { residue: f64 },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("stationary state is not unique: {dimension} stationary directions")]
    Degeneracy { dimension: usize },

    #[error("label error: {0}")]
    Label(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
