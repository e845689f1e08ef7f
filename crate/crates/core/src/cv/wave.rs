use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};

use super::{CvError, CvVector};
use crate::mesh::{MeshGraph, SurfacePoint, TriMesh, Vec3};

/// Default neighbourhood: about two rings of vertices.
pub const WAVE_NEIGHBOURS: usize = 20;

/// Plane-wave fit around a face centroid: embed the k graph-nearest
/// vertices in 2D by classical MDS, fit t ≈ a + g·x, rotate g back onto the
/// face plane.
pub fn wave_cv(graph: &MeshGraph, mesh: &TriMesh, lat: &[f64], face: usize, k: usize) -> Result<CvVector, CvError> {
    if k < 4 {
        return Err(CvError::InvalidArgument(format!("wave fit needs k >= 4, got {k}")));
    }
    let near = graph.k_nearest(SurfacePoint::Centroid(face), k)?;
    let k = near.len();
    if k < 4 {
        return Err(CvError::RankDeficient(face));
    }
    let pts: Vec<Vec3> = near.iter().map(|&(v, _)| mesh.vertex(v)).collect();
    // squared chord distances, double-centred
    let mut b = DMatrix::<f64>::from_fn(k, k, |i, j| (pts[i] - pts[j]).norm_squared());
    let row_mean: Vec<f64> = (0..k).map(|i| b.row(i).sum() / k as f64).collect();
    let all_mean = row_mean.iter().sum::<f64>() / k as f64;
    for i in 0..k {
        for j in 0..k {
            b[(i, j)] = -0.5 * (b[(i, j)] - row_mean[i] - row_mean[j] + all_mean);
        }
    }
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&c)));
    let (l1, l2) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    if !(l1 > 0.0) || l2 <= 1e-10 * l1 {
        return Err(CvError::RankDeficient(face));
    }
    let x = DMatrix::<f64>::from_fn(k, 2, |i, c| {
        let col = order[c];
        eig.eigenvectors[(i, col)] * eig.eigenvalues[col].max(0.0).sqrt()
    });

    // least squares t = a + g·x
    let design = DMatrix::<f64>::from_fn(k, 3, |i, c| if c == 0 { 1.0 } else { x[(i, c - 1)] });
    let t = DVector::<f64>::from_iterator(k, near.iter().map(|&(v, _)| lat[v]));
    let svd = design.clone().svd(true, true);
    let coef = svd.solve(&t, 1e-12).map_err(|_| CvError::RankDeficient(face))?;
    let g = nalgebra::Vector2::new(coef[1], coef[2]);

    // tangent coordinates of the same points
    let [a, bb, c] = mesh.face(face);
    let (pa, pb, pc) = (mesh.vertex(a), mesh.vertex(bb), mesh.vertex(c));
    let normal = (pb - pa).cross(&(pc - pa)).normalize();
    let e1 = (pb - pa).normalize();
    let e2 = normal.cross(&e1);
    let centre = pts.iter().fold(Vec3::zeros(), |s, p| s + p) / k as f64;
    let y = DMatrix::<f64>::from_fn(k, 2, |i, col| {
        let d = pts[i] - centre;
        if col == 0 { d.dot(&e1) } else { d.dot(&e2) }
    });
    // orthogonal R with X R ≈ Y
    let m: Matrix2<f64> = (x.transpose() * &y).fixed_view::<2, 2>(0, 0).into_owned();
    let s = m.svd(true, true);
    let r = s.u.unwrap() * s.v_t.unwrap();
    let gy = r.transpose() * g;
    Ok(CvVector::from_gradient(e1 * gy[0] + e2 * gy[1]))
}
