use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("{n_qubits} qubits exceeds the dense operator cap of {cap}")]
    DimensionOverflow { n_qubits: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("time {t} lies outside the pulse window [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("external flux {phi} is too close to a divergence of the coupling (|cos| <= 1e-9)")]
    DivergentCoupling { phi: f64 },

    #[error("coupling {value} is below the always-on bound {bound}")]
    UnreachableCoupling { value: f64, bound: f64 },

    #[error("zero ground energy makes the error rate undefined")]
    ZeroGroundEnergy,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field,
            reason: reason.into(),
        }
    }
}
