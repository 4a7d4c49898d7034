//! Persistent project store, background jobs and the HTTP API.

pub mod http;
pub mod jobs;
mod service;
pub mod store;

use std::path::PathBuf;

use thiserror::Error;
use tribeforge::corpus::CorpusError;
use tribeforge::tribecraft::TribeError;

pub use http::{router, serve, ENDPOINTS};
pub use jobs::{Job, JobKind, JobSpec, JobState};
pub use service::{DecisionRequest, ProjectView, Service};
pub use store::{Manifest, ProjectStore};

pub const DEFAULT_PORT: u16 = 8742;
pub const DATA_DIR_ENV: &str = "TRIBEFORGE_DATA_DIR";
pub const PORT_ENV: &str = "TRIBEFORGE_PORT";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Conflict(String),
    #[error("storage error: {0}")]
    Io(String),
}

impl From<TribeError> for ServiceError {
    fn from(e: TribeError) -> Self {
        match e {
            TribeError::UnknownTribe(_) => ServiceError::NotFound(e.to_string()),
            TribeError::OneTribePerCategory { .. } => ServiceError::Conflict(e.to_string()),
            _ => ServiceError::Invalid(e.to_string()),
        }
    }
}

impl From<CorpusError> for ServiceError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. } => ServiceError::Io(e.to_string()),
            _ => ServiceError::Invalid(e.to_string()),
        }
    }
}

/// Where the store lives and which port to bind, from the environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub port: u16,
}

impl ServiceConfig {
    pub fn from_env() -> Result<Self, ServiceError> {
        let data_dir = std::env::var_os(DATA_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("tribeforge-data"));
        let port = match std::env::var(PORT_ENV) {
            Ok(p) => p
                .parse()
                .map_err(|_| ServiceError::Invalid(format!("{PORT_ENV}={p:?} is not a port number")))?,
            Err(_) => DEFAULT_PORT,
        };
        Ok(Self { data_dir, port })
    }
}
