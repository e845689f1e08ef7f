//! Laplace–Beltrami spectral basis on the subdivided, extended mesh.

mod basis;
pub mod cache;
mod eigen;
mod gradient;
mod laplacian;

use thiserror::Error;

pub use basis::{build_basis, build_basis_full, restrict_basis, BasisBuild, BasisConfig, BasisProvenance, EigenBasis};
pub use eigen::{smallest_eigenpairs, EigenConfig, EigenPairs};
pub use gradient::{centroid_gradients, face_gradient_operator, GradientField};
pub use laplacian::{assemble_laplacian, assemble_mesh_laplacian, LaplacianSystem};

pub type SpectralResult<T> = std::result::Result<T, SpectralError>;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("fine face {face}: zero area ({area:e} mm^2)")]
    ZeroAreaFace { face: usize, area: f64 },
    #[error("requested {requested} eigenpairs but the fine mesh has {available} vertices")]
    BadBasisSize { requested: usize, available: usize },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),
    #[error("face {face}: cubic gradient fit is rank deficient")]
    RankDeficientFit { face: usize },
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
}
