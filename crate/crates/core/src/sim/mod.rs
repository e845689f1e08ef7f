//! Eikonal virtual patient: heterogeneous speed fields, fast-marching
//! activation times and noisy observation designs.

mod eikonal;
mod observe;
mod speed;

use thiserror::Error;

pub use eikonal::{eikonal_lat, fast_march, EikonalSolution, TruthField};
pub use observe::{sample_observations, SampleMode};
pub use speed::{sample_speed_field, SpeedField, SpeedParams};

use crate::cv::CvError;
use crate::mesh::MeshError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid speed parameters: {0}")]
    BadSpeed(String),
    #[error("no sources given")]
    NoSources,
    #[error("source vertex {0} out of range")]
    BadSource(usize),
    #[error("{} vertices never reached (first: {:?})", .0.len(), &.0[..(.0.len().min(10))])]
    Unreached(Vec<usize>),
    #[error("cannot select {requested} of {available} vertices")]
    TooManyObservations { requested: usize, available: usize },
    #[error("invalid noise SD {0}")]
    BadNoise(f64),
    #[error(transparent)]
    Cv(#[from] CvError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}
