use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),

    #[error("modulus {0} exceeds the 63-bit limit")]
    ModulusTooLarge(u64),

    #[error("no 63-bit prime at or above {0}")]
    PrimeOverflow(u64),

    #[error("repetition count t={0} must be odd and at least 1")]
    EvenRepetitions(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("median needs an odd, non-empty list (got {0} values)")]
    EvenMedianLength(usize),

    #[error("integrand returned a non-finite value {value} at node l={node}")]
    NonFiniteIntegrand { value: String, node: i64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("support box admits {shifts} integer shifts on axis {axis} (cap {cap})")]
    TooManyShifts { axis: usize, shifts: u64, cap: u64 },

    #[error("oracle instance needs {cases} cases, over the cap of {cap}")]
    CaseCap { cases: u128, cap: u128 },

    #[error("unknown integrand `{0}`")]
    UnknownIntegrand(String),

    #[error("slope fit: {0}")]
    Slope(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// True for errors caused by bad user input rather than I/O or runtime failures.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::Csv { .. } | Error::NonFiniteIntegrand { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
