//! Reduced-rank Gaussian process interpolation on triangulated surfaces.
//!
//! The pipeline: a mesh is extended with boundary tubes and subdivided,
//! the cotan Laplacian eigenpairs give a spectral basis, and a Matérn
//! prior expressed in that basis is conditioned on activation-time
//! observations. Gradient posteriors feed conduction-velocity maps.
//! An eikonal virtual patient supplies ground truth for validation.

pub mod cv;
pub mod error;
pub mod export;
pub mod gp;
pub mod harness;
pub mod mesh;
pub mod metrics;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use mesh::{TriMesh, Vec3};
