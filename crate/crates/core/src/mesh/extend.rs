use super::boundary::{boundary_loops, loop_normal};
use super::{MeshError, MeshResult, TriMesh, Vec3};

/// Mesh with tubes appended to its boundary loops.
#[derive(Debug, Clone)]
pub struct ExtendedMesh {
    pub mesh: TriMesh,
    /// `true` for vertices of the input mesh. They keep their indices and
    /// come first; input faces also keep their indices.
    pub original_mask: Vec<bool>,
    pub original_vertices: usize,
    pub original_faces: usize,
}

/// Append `layers` rings of saw-tooth triangles to every boundary loop.
///
/// Each layer puts an apex above every rim edge at height |e|·tan(60°)/2
/// along the rim's plane normal, then bridges neighbouring apices through
/// the shared rim vertex. A loop of length B gains B vertices and 2B faces
/// per layer.
pub fn extend_boundaries(mesh: &TriMesh, layers: usize) -> MeshResult<ExtendedMesh> {
    let nv = mesh.n_vertices();
    let nf = mesh.n_faces();
    if layers == 0 {
        return Ok(ExtendedMesh {
            mesh: mesh.clone(),
            original_mask: vec![true; nv],
            original_vertices: nv,
            original_faces: nf,
        });
    }
    let loops = boundary_loops(mesh)?;
    if loops.is_empty() {
        return Err(MeshError::NoBoundary);
    }
    let centre = mesh.area_centroid();
    let mut verts: Vec<Vec3> = mesh.vertices().collect();
    let mut faces: Vec<[usize; 3]> = mesh.faces().to_vec();
    let tan60_half = 3f64.sqrt() / 2.0;

    for lp in &loops {
        let b = lp.len();
        if b < 3 {
            return Err(MeshError::ShortLoop { start: lp.vertices[0], len: b });
        }
        let mut ring = lp.vertices.clone();
        for _ in 0..layers {
            let pts: Vec<Vec3> = ring.iter().map(|&i| verts[i]).collect();
            let n = loop_normal(&pts, &centre);
            let base = verts.len();
            for k in 0..b {
                let (pi, pj) = (pts[k], pts[(k + 1) % b]);
                verts.push(0.5 * (pi + pj) + n * ((pj - pi).norm() * tan60_half));
            }
            for k in 0..b {
                let (i, j) = (ring[k], ring[(k + 1) % b]);
                faces.push([j, i, base + k]);
            }
            for k in 0..b {
                let j = ring[(k + 1) % b];
                faces.push([j, base + k, base + (k + 1) % b]);
            }
            ring = (base..base + b).collect();
        }
    }
    let total = verts.len();
    let mut mask = vec![false; total];
    mask[..nv].iter_mut().for_each(|m| *m = true);
    Ok(ExtendedMesh {
        mesh: TriMesh::new(verts, faces)?,
        original_mask: mask,
        original_vertices: nv,
        original_faces: nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn counts_per_layer() {
        let m = shapes::disc(6.0, 2); // rim of 12
        let e = extend_boundaries(&m, 1).unwrap();
        assert_eq!(e.mesh.n_vertices(), m.n_vertices() + 12);
        assert_eq!(e.mesh.n_faces(), m.n_faces() + 24);
        let e3 = extend_boundaries(&m, 3).unwrap();
        assert_eq!(e3.mesh.n_faces(), m.n_faces() + 72);
        assert_eq!(boundary_loops(&e3.mesh).unwrap().len(), 1);
    }

    #[test]
    fn zero_layers_is_identity() {
        let m = shapes::disc(6.0, 2);
        let e = extend_boundaries(&m, 0).unwrap();
        assert_eq!(e.mesh, m);
        assert!(e.original_mask.iter().all(|&b| b));
    }

    #[test]
    fn originals_untouched() {
        let m = shapes::cylinder(3.0, 4.0, 10, 3);
        let e = extend_boundaries(&m, 4).unwrap();
        assert_eq!(&e.mesh.raw_vertices()[..m.n_vertices()], m.raw_vertices());
        assert_eq!(&e.mesh.faces()[..m.n_faces()], m.faces());
        assert_eq!(boundary_loops(&e.mesh).unwrap().len(), 2);
    }

    #[test]
    fn closed_mesh_is_rejected() {
        assert_eq!(extend_boundaries(&shapes::icosphere(1.0, 1), 2).unwrap_err(), MeshError::NoBoundary);
    }
}
