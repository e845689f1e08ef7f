use super::{TriMesh, Vec3};

/// Per-face and per-vertex geometric quantities of a mesh.
#[derive(Debug, Clone)]
pub struct FaceGeometry {
    pub areas: Vec<f64>,
    pub normals: Vec<Vec3>,
    pub centroids: Vec<Vec3>,
    /// Cotangent of the interior angle at each corner, in face-vertex order.
    pub cotangents: Vec<[f64; 3]>,
    /// Barycentric lumped areas: a third of every incident face.
    pub vertex_areas: Vec<f64>,
    /// Sorted one-ring neighbour lists.
    pub one_rings: Vec<Vec<usize>>,
    /// Incident faces per vertex, ascending.
    pub vertex_faces: Vec<Vec<usize>>,
}

pub fn face_geometry(mesh: &TriMesh) -> FaceGeometry {
    let nf = mesh.n_faces();
    let nv = mesh.n_vertices();
    let mut areas = Vec::with_capacity(nf);
    let mut normals = Vec::with_capacity(nf);
    let mut centroids = Vec::with_capacity(nf);
    let mut cotangents = Vec::with_capacity(nf);
    let mut vertex_areas = vec![0.0; nv];
    let mut one_rings = vec![Vec::new(); nv];
    let mut vertex_faces = vec![Vec::new(); nv];

    for (fi, f) in mesh.faces().iter().enumerate() {
        let p = [mesh.vertex(f[0]), mesh.vertex(f[1]), mesh.vertex(f[2])];
        let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
        let twice = n.norm();
        areas.push(0.5 * twice);
        normals.push(n / twice);
        centroids.push((p[0] + p[1] + p[2]) / 3.0);
        let mut cots = [0.0; 3];
        for k in 0..3 {
            let u = p[(k + 1) % 3] - p[k];
            let v = p[(k + 2) % 3] - p[k];
            cots[k] = u.dot(&v) / u.cross(&v).norm();
        }
        cotangents.push(cots);
        for k in 0..3 {
            vertex_areas[f[k]] += 0.5 * twice / 3.0;
            one_rings[f[k]].push(f[(k + 1) % 3]);
            one_rings[f[k]].push(f[(k + 2) % 3]);
            vertex_faces[f[k]].push(fi);
        }
    }
    for r in &mut one_rings {
        r.sort_unstable();
        r.dedup();
    }
    FaceGeometry { areas, normals, centroids, cotangents, vertex_areas, one_rings, vertex_faces }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn right_isoceles() {
        let m = TriMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![[0, 1, 2]]).unwrap();
        let g = face_geometry(&m);
        assert!((g.areas[0] - 0.5).abs() < 1e-15);
        let c = g.cotangents[0];
        assert!(c[0].abs() < 1e-15 && (c[1] - 1.0).abs() < 1e-12 && (c[2] - 1.0).abs() < 1e-12);
        assert!((g.normals[0] - Vec3::z()).norm() < 1e-15);
    }

    #[test]
    fn equilateral_cotangents() {
        let h = 3f64.sqrt() / 2.0;
        let m = TriMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::new(0.5, h, 0.0)], vec![[0, 1, 2]]).unwrap();
        let g = face_geometry(&m);
        for c in g.cotangents[0] {
            assert!((c - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn lumped_areas_partition_unit_square() {
        let m = shapes::square_grid(65, 1.0);
        let g = face_geometry(&m);
        let s: f64 = g.vertex_areas.iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
        let t: f64 = g.areas.iter().sum();
        assert!((s - t).abs() < 1e-9 * t);
        for n in &g.normals {
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
    }
}
