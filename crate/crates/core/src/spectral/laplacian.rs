use faer::sparse::{SparseColMat, Triplet};

use super::{SpectralError, SpectralResult};
use crate::mesh::{face_geometry, SubdividedMesh, TriMesh, MIN_FACE_AREA};

/// Cotangent stiffness matrix and lumped mass of a mesh.
///
/// Stored as a symmetric CSC matrix with sorted rows per column and merged
/// duplicates, so products and factorizations are reproducible.
#[derive(Debug, Clone)]
pub struct LaplacianSystem {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
    pub mass: Vec<f64>,
}

pub fn assemble_laplacian(sub: &SubdividedMesh) -> SpectralResult<LaplacianSystem> {
    assemble_mesh_laplacian(&sub.fine)
}

pub fn assemble_mesh_laplacian(mesh: &TriMesh) -> SpectralResult<LaplacianSystem> {
    let g = face_geometry(mesh);
    let n = mesh.n_vertices();
    let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(12 * mesh.n_faces());
    for (fi, f) in mesh.faces().iter().enumerate() {
        if !(g.areas[fi] > MIN_FACE_AREA) {
            return Err(SpectralError::ZeroAreaFace { face: fi, area: g.areas[fi] });
        }
        for k in 0..3 {
            // the corner k faces the edge (k+1, k+2)
            let w = 0.5 * g.cotangents[fi][k];
            let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
            trip.push((i, j, -w));
            trip.push((j, i, -w));
        }
    }
    trip.sort_unstable_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    // merge duplicates, then set each diagonal to minus its off-diagonal sum
    let mut col_ptr = vec![0usize; n + 1];
    let mut row_idx = Vec::with_capacity(trip.len() / 2 + n);
    let mut values = Vec::with_capacity(trip.len() / 2 + n);
    let mut t = 0;
    for c in 0..n {
        let mut diag_pos = None;
        let mut off_sum = 0.0;
        let mut pushed_diag = false;
        while t < trip.len() && trip[t].1 == c {
            let r = trip[t].0;
            let mut v = 0.0;
            while t < trip.len() && trip[t].1 == c && trip[t].0 == r {
                v += trip[t].2;
                t += 1;
            }
            if r > c && !pushed_diag {
                diag_pos = Some(row_idx.len());
                row_idx.push(c);
                values.push(0.0);
                pushed_diag = true;
            }
            row_idx.push(r);
            values.push(v);
            off_sum += v;
        }
        if !pushed_diag {
            diag_pos = Some(row_idx.len());
            row_idx.push(c);
            values.push(0.0);
        }
        values[diag_pos.unwrap()] = -off_sum;
        col_ptr[c + 1] = row_idx.len();
    }
    Ok(LaplacianSystem { n, col_ptr, row_idx, values, mass: g.vertex_areas })
}

impl LaplacianSystem {
    /// y = L x
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        // symmetric, so the CSC columns double as rows
        for (c, yc) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                s += self.values[p] * x[self.row_idx[p]];
            }
            *yc = s;
        }
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        let rng = self.col_ptr[c]..self.col_ptr[c + 1];
        match self.row_idx[rng.clone()].binary_search(&r) {
            Ok(p) => self.values[rng.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn total_area(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Lower triangle of L + shift·diag(mass) as a faer sparse matrix.
    pub(crate) fn shifted_lower(&self, shift: f64) -> SpectralResult<SparseColMat<usize, f64>> {
        let mut trip = Vec::with_capacity(self.values.len() / 2 + self.n);
        for c in 0..self.n {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[p];
                if r == c {
                    trip.push(Triplet::new(r, c, self.values[p] + shift * self.mass[c]));
                } else if r > c {
                    trip.push(Triplet::new(r, c, self.values[p]));
                }
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &trip)
            .map_err(|e| SpectralError::Factorization(format!("{e:?}")))
    }
}
