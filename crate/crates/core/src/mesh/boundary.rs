use std::collections::{HashMap, HashSet};

use nalgebra::{Matrix3, SymmetricEigen};

use super::{MeshError, MeshResult, TriMesh, Vec3};

/// A closed boundary cycle, ordered along its boundary half-edges.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLoop {
    pub vertices: Vec<usize>,
    /// Best-fit plane normal, pointing away from the surface centre of mass.
    pub normal: Vec3,
}

impl BoundaryLoop {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

pub fn boundary_loops(mesh: &TriMesh) -> MeshResult<Vec<BoundaryLoop>> {
    let mut directed = HashSet::with_capacity(3 * mesh.n_faces());
    for f in mesh.faces() {
        for k in 0..3 {
            directed.insert((f[k], f[(k + 1) % 3]));
        }
    }
    // boundary half-edges in face order, so tracing is deterministic
    let mut next: HashMap<usize, usize> = HashMap::new();
    let mut starts = Vec::new();
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if !directed.contains(&(b, a)) {
                if let Some(&other) = next.get(&a) {
                    return Err(MeshError::NonManifoldBoundary { vertex: a, a: other, b });
                }
                next.insert(a, b);
                starts.push(a);
            }
        }
    }
    if starts.is_empty() {
        return Ok(Vec::new());
    }
    let centre = mesh.area_centroid();
    let mut visited: HashSet<usize> = HashSet::with_capacity(starts.len());
    let mut loops = Vec::new();
    for &s in &starts {
        if visited.contains(&s) {
            continue;
        }
        let mut cycle = vec![s];
        visited.insert(s);
        let mut cur = s;
        loop {
            let n = *next.get(&cur).ok_or(MeshError::NonManifoldBoundary { vertex: cur, a: cur, b: cur })?;
            if n == s {
                break;
            }
            if !visited.insert(n) {
                return Err(MeshError::NonManifoldBoundary { vertex: n, a: cur, b: n });
            }
            cycle.push(n);
            cur = n;
        }
        let pts: Vec<Vec3> = cycle.iter().map(|&i| mesh.vertex(i)).collect();
        let normal = loop_normal(&pts, &centre);
        loops.push(BoundaryLoop { vertices: cycle, normal });
    }
    Ok(loops)
}

/// Least-squares plane normal of a closed polyline, oriented away from `centre`.
///
/// When the loop centroid lies in the plane through `centre` (a flat open
/// sheet), the polygon winding decides the sign instead.
pub(crate) fn loop_normal(pts: &[Vec3], centre: &Vec3) -> Vec3 {
    let n = pts.len() as f64;
    let c = pts.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let mut cov = Matrix3::zeros();
    for p in pts {
        let d = p - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let imin = eig.eigenvalues.imin();
    let mut nrm: Vec3 = eig.eigenvectors.column(imin).into_owned();
    nrm /= nrm.norm();
    let mut newell = Vec3::zeros();
    for i in 0..pts.len() {
        newell += pts[i].cross(&pts[(i + 1) % pts.len()]);
    }
    let scale = pts.iter().map(|p| (p - c).norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let off = (c - centre).dot(&nrm);
    let sign = if off.abs() > 1e-9 * scale {
        off.signum()
    } else if newell.dot(&nrm) != 0.0 {
        newell.dot(&nrm).signum()
    } else {
        1.0
    };
    sign * nrm
}
