use thiserror::Error;

/// Errors produced by state construction, channel maps, metrics and sweeps.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside its allowed domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The covariance matrix cannot describe a quantum state (or is degenerate
    /// for the requested quantity).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A required homodyne channel is absent from a sample set.
    #[error("incomplete measurement: missing observable {0}")]
    IncompleteMeasurement(String),

    /// A measurement set violates positivity or the sum/difference bounds.
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    /// The defining function keeps the same sign on both ends of a bracket.
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// Malformed text input (channel notation, matrix files, CSV).
    #[error("parse error: {0}")]
    Parse(String),

    /// An error raised while evaluating a sweep at a particular axis value.
    #[error("at axis value {value}: {source}")]
    AtAxis { value: f64, source: Box<Error> },
}

impl Error {
    /// Strips any sweep-position wrappers.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::AtAxis { source, .. } => source.root_cause(),
            other => other,
        }
    }

    pub(crate) fn at_axis(value: f64, source: Error) -> Error {
        Error::AtAxis {
            value,
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
