use thiserror::Error;

use crate::assemblage::ConsistencyReport;
use crate::sdp::SdpStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state vector not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("operator is not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("inconsistent assemblage: {0}")]
    InconsistentAssemblage(ConsistencyReport),

    #[error("protocol {protocol} needs {expected} settings, report has {found}")]
    ProtocolMismatch {
        protocol: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("incomplete count records, missing cells: {}", .0.join(", "))]
    IncompleteRecords(Vec<String>),

    #[error("malformed count data at row {row}, column {column}: {message}")]
    MalformedCounts {
        row: usize,
        column: String,
        message: String,
    },

    #[error("SDP solve ended with status {0:?}")]
    Solver(SdpStatus),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn ensure_finite(value: f64, what: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(what))
    }
}
