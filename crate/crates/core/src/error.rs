use thiserror::Error;

/// Errors produced by the numerical and placement routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hurwitz: max real eigenvalue {max_real:.6e} is not below -{margin:.1e}")]
    Stability { max_real: f64, margin: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("Gramian is singular: eigenvalue {eigenvalue:.6e} is below threshold {threshold:.6e}")]
    Singular { eigenvalue: f64, threshold: f64 },

    #[error("target state is not reachable: residual {residual:.6e} outside the Gramian range")]
    Unreachable { residual: f64 },

    #[error("enumeration too large: C({m}, {k}) = {count:.4e} subsets exceeds cap {cap}")]
    EnumerationTooLarge { m: usize, k: usize, count: f64, cap: u64 },

    #[error("network is disconnected: {0}")]
    Topology(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by malformed or out-of-range input rather than
    /// numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_)
                | Error::Domain(_)
                | Error::EnumerationTooLarge { .. }
                | Error::Topology(_)
                | Error::Parse(_)
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
