use faer::Mat;
use serde::{Deserialize, Serialize};

use super::eigen::{smallest_eigenpairs, EigenConfig, EigenPairs};
use super::gradient::{centroid_gradients, GradientField};
use super::laplacian::assemble_laplacian;
use super::{SpectralError, SpectralResult};
use crate::mesh::{boundary_loops, extend_boundaries, subdivide9, ExtendedMesh, SubdividedMesh, SurfacePoint, TriMesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisProvenance {
    pub mesh_hash: String,
    pub num_basis: usize,
    pub layers: usize,
    pub n_vertices: usize,
    pub n_faces: usize,
    /// Area of the extended fine mesh (mm²).
    pub total_area: f64,
    pub mean_edge_length: f64,
    pub diameter: f64,
}

/// Eigenpairs restricted to the original vertices and face centroids.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub lambdas: Vec<f64>,
    pub phi_v: Mat<f64>,
    pub phi_c: Mat<f64>,
    pub grad_c: GradientField,
    pub provenance: BasisProvenance,
}

#[derive(Debug, Clone)]
pub struct BasisConfig {
    pub num_basis: usize,
    pub layers: usize,
    pub eigen: EigenConfig,
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig { num_basis: 256, layers: 15, eigen: EigenConfig::default() }
    }
}

/// Every intermediate product of a basis build.
#[derive(Debug, Clone)]
pub struct BasisBuild {
    pub basis: EigenBasis,
    pub extended: ExtendedMesh,
    pub sub: SubdividedMesh,
    pub pairs: EigenPairs,
}

pub fn build_basis(mesh: &TriMesh, cfg: &BasisConfig) -> SpectralResult<EigenBasis> {
    Ok(build_basis_full(mesh, cfg)?.basis)
}

pub fn build_basis_full(mesh: &TriMesh, cfg: &BasisConfig) -> SpectralResult<BasisBuild> {
    let has_boundary = !boundary_loops(mesh)?.is_empty();
    let layers = if has_boundary { cfg.layers } else { 0 };
    let extended = extend_boundaries(mesh, layers)?;
    let sub = subdivide9(&extended.mesh)?;
    let sys = assemble_laplacian(&sub)?;
    let pairs = smallest_eigenpairs(&sys, cfg.num_basis, &cfg.eigen)?;
    let grads = centroid_gradients(&sub, &pairs.vectors, extended.original_faces)?;
    let provenance = BasisProvenance {
        mesh_hash: mesh.content_hash(),
        num_basis: cfg.num_basis,
        layers: cfg.layers,
        n_vertices: mesh.n_vertices(),
        n_faces: mesh.n_faces(),
        total_area: sys.total_area(),
        mean_edge_length: mesh.mean_edge_length(),
        diameter: mesh.diameter(),
    };
    let basis = restrict_basis(&sub, &extended, &pairs.values, &pairs.vectors, &grads, provenance)?;
    Ok(BasisBuild { basis, extended, sub, pairs })
}

/// Keep rows for original vertices and original-face centroids only.
pub fn restrict_basis(
    sub: &SubdividedMesh,
    ext: &ExtendedMesh,
    lambdas: &[f64],
    vectors: &Mat<f64>,
    grads: &GradientField,
    provenance: BasisProvenance,
) -> SpectralResult<EigenBasis> {
    let m = vectors.ncols();
    let nv = ext.original_vertices;
    let nf = ext.original_faces;
    if grads.gx.nrows() < nf {
        return Err(SpectralError::BadBasisSize { requested: nf, available: grads.gx.nrows() });
    }
    let vrows: Vec<usize> = (0..nv)
        .filter(|&i| ext.original_mask[i])
        .map(|i| sub.vertex_map[i])
        .collect();
    let phi_v = Mat::from_fn(vrows.len(), m, |i, k| vectors[(vrows[i], k)]);
    let phi_c = Mat::from_fn(nf, m, |f, k| vectors[(sub.centroid_map[f], k)]);
    let take = |g: &Mat<f64>| Mat::from_fn(nf, m, |f, k| g[(f, k)]);
    Ok(EigenBasis {
        lambdas: lambdas.to_vec(),
        phi_v,
        phi_c,
        grad_c: GradientField { gx: take(&grads.gx), gy: take(&grads.gy), gz: take(&grads.gz) },
        provenance,
    })
}

impl EigenBasis {
    pub fn m(&self) -> usize {
        self.lambdas.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.phi_v.nrows()
    }

    pub fn n_faces(&self) -> usize {
        self.phi_c.nrows()
    }

    /// The first `m` eigenpairs only.
    pub fn truncated(&self, m: usize) -> EigenBasis {
        let m = m.min(self.m());
        let cut = |a: &Mat<f64>| Mat::from_fn(a.nrows(), m, |i, k| a[(i, k)]);
        let mut provenance = self.provenance.clone();
        provenance.num_basis = m;
        EigenBasis {
            lambdas: self.lambdas[..m].to_vec(),
            phi_v: cut(&self.phi_v),
            phi_c: cut(&self.phi_c),
            grad_c: GradientField { gx: cut(&self.grad_c.gx), gy: cut(&self.grad_c.gy), gz: cut(&self.grad_c.gz) },
            provenance,
        }
    }

    pub fn contains(&self, p: SurfacePoint) -> bool {
        match p {
            SurfacePoint::Vertex(v) => v < self.n_vertices(),
            SurfacePoint::Centroid(f) => f < self.n_faces(),
        }
    }

    /// Basis values at a point.
    pub fn row(&self, p: SurfacePoint) -> Option<Vec<f64>> {
        if !self.contains(p) {
            return None;
        }
        let (mat, i) = match p {
            SurfacePoint::Vertex(v) => (&self.phi_v, v),
            SurfacePoint::Centroid(f) => (&self.phi_c, f),
        };
        Some((0..self.m()).map(|k| mat[(i, k)]).collect())
    }

    /// Rows for a list of points as a |points| × M matrix.
    pub fn rows(&self, pts: &[SurfacePoint]) -> Option<Mat<f64>> {
        if pts.iter().any(|p| !self.contains(*p)) {
            return None;
        }
        Some(Mat::from_fn(pts.len(), self.m(), |i, k| match pts[i] {
            SurfacePoint::Vertex(v) => self.phi_v[(v, k)],
            SurfacePoint::Centroid(f) => self.phi_c[(f, k)],
        }))
    }
}
