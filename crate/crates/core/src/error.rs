use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecomapError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("basis matrix is not unitary (deviation {deviation:.3e})")]
    InvalidBasis { deviation: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})")]
    Convergence { sweeps: usize, off_norm: f64 },

    #[error("element outside the domain: {reason}")]
    Domain { reason: String },

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("unsupported dimensions p={p}, q={q} (pq > 6); use sep_witness instead")]
    UnsupportedDimension { p: usize, q: usize },

    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl DecomapError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        DecomapError::Dimension(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        DecomapError::Domain { reason: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, DecomapError>;
