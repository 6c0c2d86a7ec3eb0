use thiserror::Error;

use crate::sdp::SdpStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("scenario mismatch: {0}")]
    Scenario(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("enumeration budget exceeded: {count} strategies for one party (limit {limit})")]
    Budget { count: u128, limit: u128 },

    #[error("SDP solver returned {status:?}: {detail}")]
    Solver { status: SdpStatus, detail: String },

    #[error("behavior is not representable at this hierarchy level: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
