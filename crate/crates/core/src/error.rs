use thiserror::Error;

use crate::cv::CvError;
use crate::gp::GpError;
use crate::mesh::MeshError;
use crate::metrics::MetricsError;
use crate::sim::SimError;
use crate::spectral::SpectralError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Cv(#[from] CvError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv error in {path}: {msg}")]
    Csv { path: String, msg: String },
    #[error("schema mismatch in {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("stale cache: {0}")]
    StaleCache(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Short machine-readable category used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Mesh(_) => "mesh",
            Error::Spectral(_) => "spectral",
            Error::Gp(_) => "gp",
            Error::Cv(_) => "cv",
            Error::Sim(_) => "sim",
            Error::Metrics(_) => "metrics",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::Csv { .. } => "csv",
            Error::Schema { .. } => "schema",
            Error::StaleCache(_) => "stale_cache",
            Error::InvalidArgument(_) => "argument",
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
