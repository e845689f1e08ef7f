//! Reduced-rank Matérn GP regression over an eigenfunction basis.

mod density;
mod fit;
mod model;
mod observations;
mod solve;

use faer::Mat;
use thiserror::Error;

pub use density::{explained_variance, matern, spectral_density, weight_variances, Hyperparams, Smoothness, DIM};
pub use fit::{fit_hyperparameters, Bounds, FitConfig, FitDiagnostics, LikelihoodWorkspace, StartRecord};
pub use model::{all_points, GpModel, GradientPosterior, PosteriorField};
pub use observations::{ObservationSet, Standardization};
pub use solve::{SolveOptions, SolvePath};

use crate::mesh::SurfacePoint;
use crate::spectral::EigenBasis;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("bad observations: {0}")]
    BadObservations(String),
    #[error("bad hyperparameters: {0}")]
    BadHyperparams(String),
    #[error("target not in basis: {0}")]
    UnknownTarget(String),
    #[error("gradients need smoothness above 1/2")]
    NotDifferentiable,
    #[error("negative posterior variance at {0}")]
    NegativeVariance(String),
    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("fit failed from every start; best (l, tau2, eta) = {best:?}, log-likelihood {log_lik}")]
    FitFailed { best: [f64; 3], log_lik: f64 },
}

/// Prior covariance τ² Σ S(√λ_k) φ_k(a) φ_k(b) between two point lists.
pub fn prior_covariance(basis: &EigenBasis, hp: &Hyperparams, a: &[SurfacePoint], b: &[SurfacePoint]) -> Result<Mat<f64>, GpError> {
    let miss = || GpError::UnknownTarget("point outside basis".into());
    let pa = basis.rows(a).ok_or_else(miss)?;
    let pb = basis.rows(b).ok_or_else(miss)?;
    let d = weight_variances(&basis.lambdas, hp);
    let scaled = Mat::from_fn(pa.nrows(), pa.ncols(), |i, k| pa[(i, k)] * d[k]);
    Ok(&scaled * pb.transpose())
}
