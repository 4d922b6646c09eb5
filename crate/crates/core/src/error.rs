use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the model.
    #[error("domain error: {0}")]
    Domain(String),

    /// A simulation would allocate more events than the configured guard.
    #[error("resource limit: expected {expected:.3e} events exceeds guard of {limit:.3e}")]
    Resource { expected: f64, limit: f64 },

    /// Inputs violate a documented calling contract (e.g. unsorted streams).
    #[error("contract violation: {0}")]
    Contract(String),

    /// No sifted coincidences were available to estimate an error rate.
    #[error("QBER undefined: no sifted coincidences")]
    UndefinedQber,

    /// Clock recovery found no correlation peak above the noise floor.
    #[error("clock lock failure in block {block}: peak {peak:.1} below threshold {threshold:.1}")]
    LockFailure {
        block: usize,
        peak: f64,
        threshold: f64,
    },

    /// Time-tag encoding or decoding failed.
    #[error("codec error: {0}")]
    Codec(String),

    /// Scenario file could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A configuration key does not exist.
    #[error("unknown key `{0}`")]
    UnknownKey(String),

    /// A configuration value is outside its permitted range.
    #[error("`{key}` out of range: {message}")]
    Range { key: String, message: String },

    /// Unknown command name.
    #[error("unknown command `{0}`")]
    UnknownCommand(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
