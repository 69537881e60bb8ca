use std::fmt;

/// Errors surfaced by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A dimension argument was zero or otherwise unusable.
    InvalidDimension(String),
    /// Two vectors or a vector and a matrix disagree in length.
    DimensionMismatch { expected: usize, got: usize },
    /// An input contained NaN or infinity.
    NonFiniteInput,
    /// A Kaczmarz row was (numerically) zero.
    DegenerateRow,
    /// The hidden signal was the zero vector.
    InvalidSignal,
    /// A finite row measure with no rows.
    EmptyMeasure,
    /// All observed magnitudes are zero; no scale can be estimated.
    DegenerateInstance,
    /// Initial relative error places the start outside the basin of
    /// linear convergence.
    OutOfBasin { delta: f64, limit: f64 },
    /// No ensemble estimate collected a majority cluster.
    NoMajority,
    /// A parameter failed validation.
    InvalidParameter(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDimension(msg) => write!(f, "invalid dimension: {msg}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NonFiniteInput => write!(f, "input contains non-finite entries"),
            Error::DegenerateRow => write!(f, "row vector is zero"),
            Error::InvalidSignal => write!(f, "signal vector is zero"),
            Error::EmptyMeasure => write!(f, "row measure has no rows"),
            Error::DegenerateInstance => write!(f, "all magnitudes are zero"),
            Error::OutOfBasin { delta, limit } => {
                write!(f, "initial relative error {delta} is not below sin(pi/8) = {limit}")
            }
            Error::NoMajority => write!(f, "no ensemble estimate gathered a majority cluster"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
