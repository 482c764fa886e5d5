use thiserror::Error;

use crate::expansion::ExpansionError;
use crate::models::BackendError;
use crate::search::SearchError;
use crate::tasks::TaskError;
use crate::trace::TraceError;

/// Top-level error for anything that drives a full run.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True when the failure came from a model endpoint rather than from
    /// configuration or data.
    pub fn is_backend(&self) -> bool {
        match self {
            Error::Backend(_) => true,
            Error::Expansion(ExpansionError::Backend(_)) => true,
            Error::Task(TaskError::Backend(_)) => true,
            _ => false,
        }
    }
}
