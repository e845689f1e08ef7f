//! Conduction-velocity statistics from the gradient posterior, plus the two
//! ground-truth estimators and maximin designs.

mod element;
mod maximin;
mod summary;
mod wave;

use thiserror::Error;

pub use element::{cv_from_gradient, element_cv, element_gradient, CvVector};
pub use maximin::maximin_select;
pub use summary::{percentile, sample_cv, CentroidCv, CvSummary, PERCENTILES};
pub use wave::{wave_cv, WAVE_NEIGHBOURS};

use crate::mesh::MeshError;

/// Below this |∇LAT| (ms/mm) the CV is reported as undefined.
pub const UNDEFINED_GRADIENT: f64 = 0.02;

#[derive(Debug, Error)]
pub enum CvError {
    #[error("gradient covariance at face {face} is not PSD (eigenvalue {eigenvalue:e})")]
    NotPsd { face: usize, eigenvalue: f64 },
    #[error("degenerate face {0}")]
    DegenerateFace(usize),
    #[error("rank-deficient embedding near face {0}")]
    RankDeficient(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}
