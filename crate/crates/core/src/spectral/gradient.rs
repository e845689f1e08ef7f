//! Eigenfunction gradients at coarse-face centroids from a local cubic fit.

use faer::Mat;
use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;

use super::{SpectralError, SpectralResult};
use crate::mesh::{SubdividedMesh, Vec3};

/// Gradient components at centroids: each matrix is faces × M.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub gx: Mat<f64>,
    pub gy: Mat<f64>,
    pub gz: Mat<f64>,
}

type M10 = SMatrix<f64, 10, 10>;

/// Linear map from the ten node values of a face to the 3D gradient of the
/// least-squares bivariate cubic at the centroid.
pub fn face_gradient_operator(nodes: &[Vec3; 10], centroid: &Vec3) -> Option<[[f64; 10]; 3]> {
    let e1 = (nodes[1] - nodes[0]).normalize();
    let nrm = (nodes[1] - nodes[0]).cross(&(nodes[2] - nodes[0]));
    if !(nrm.norm() > 0.0) {
        return None;
    }
    let e2 = nrm.normalize().cross(&e1);
    let scale = nodes.iter().map(|p| (p - centroid).norm()).fold(0.0, f64::max);
    let mut v = M10::zeros();
    for (r, p) in nodes.iter().enumerate() {
        let d = p - centroid;
        let (x, y) = (d.dot(&e1) / scale, d.dot(&e2) / scale);
        let row = [1.0, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y];
        for (c, val) in row.iter().enumerate() {
            v[(r, c)] = *val;
        }
    }
    let vtv = v.transpose() * v;
    let ridge = 1e-10 * vtv.trace() / 10.0;
    let reg = (vtv + M10::identity() * ridge).cholesky()?;
    let pinv = reg.solve(&v.transpose());
    // iterative refinement removes the ridge bias on well-posed faces
    let mut op = pinv;
    let resid = M10::identity() - v * pinv;
    let mut term = pinv;
    for _ in 0..3 {
        term = term * resid;
        op += term;
    }
    if op.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let mut out = [[0.0; 10]; 3];
    for i in 0..10 {
        let g = e1 * (op[(1, i)] / scale) + e2 * (op[(2, i)] / scale);
        for k in 0..3 {
            out[k][i] = g[k];
        }
    }
    Some(out)
}

/// Gradients of every column of `vectors` (fine-mesh values) at the
/// centroids of coarse faces `0..n_faces`.
pub fn centroid_gradients(sub: &SubdividedMesh, vectors: &Mat<f64>, n_faces: usize) -> SpectralResult<GradientField> {
    let m = vectors.ncols();
    let fine = &sub.fine;
    let rows: Vec<SpectralResult<Vec<f64>>> = (0..n_faces)
        .into_par_iter()
        .map(|f| {
            let ids = &sub.face_nodes[f];
            let pts: [Vec3; 10] = std::array::from_fn(|i| fine.vertex(ids[i]));
            let op = face_gradient_operator(&pts, &pts[9]).ok_or(SpectralError::RankDeficientFit { face: f })?;
            let mut row = vec![0.0; 3 * m];
            for k in 0..m {
                let vals = SVector::<f64, 10>::from_fn(|i, _| vectors[(ids[i], k)]);
                for c in 0..3 {
                    row[3 * k + c] = (0..10).map(|i| op[c][i] * vals[i]).sum();
                }
            }
            Ok(row)
        })
        .collect();
    let mut gx = Mat::<f64>::zeros(n_faces, m);
    let mut gy = Mat::<f64>::zeros(n_faces, m);
    let mut gz = Mat::<f64>::zeros(n_faces, m);
    for (f, row) in rows.into_iter().enumerate() {
        let row = row?;
        for k in 0..m {
            gx[(f, k)] = row[3 * k];
            gy[(f, k)] = row[3 * k + 1];
            gz[(f, k)] = row[3 * k + 2];
        }
    }
    Ok(GradientField { gx, gy, gz })
}
