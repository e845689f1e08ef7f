use std::collections::HashMap;

use super::{MeshResult, TriMesh, Vec3};

/// Lattice coordinates (u, v), u along a→b and v along a→c in thirds, of the
/// ten nodes listed per coarse face: a, b, c, two on ab, two on bc, two on
/// ca, centroid.
pub const LATTICE: [(usize, usize); 10] =
    [(0, 0), (3, 0), (0, 3), (1, 0), (2, 0), (2, 1), (1, 2), (0, 2), (0, 1), (1, 1)];

/// One-to-nine refinement of a mesh.
///
/// Fine vertices are ordered: coarse vertices (same indices), then two
/// points per coarse edge in edge order, then one centroid per coarse face.
#[derive(Debug, Clone)]
pub struct SubdividedMesh {
    pub fine: TriMesh,
    pub vertex_map: Vec<usize>,
    pub centroid_map: Vec<usize>,
    pub face_nodes: Vec<[usize; 10]>,
    pub coarse_edges: usize,
}

pub fn subdivide9(mesh: &TriMesh) -> MeshResult<SubdividedMesh> {
    let nv = mesh.n_vertices();
    let edges = mesh.edges();
    let ne = edges.len();
    let mut verts: Vec<Vec3> = mesh.vertices().collect();
    verts.reserve(2 * ne + mesh.n_faces());
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(ne);
    for (k, &[a, b]) in edges.iter().enumerate() {
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        verts.push(pa + (pb - pa) / 3.0);
        verts.push(pa + (pb - pa) * (2.0 / 3.0));
        edge_index.insert((a, b), nv + 2 * k);
    }
    // fine index of the point one third of the way from p to q
    let third = |p: usize, q: usize| -> usize {
        if p < q {
            edge_index[&(p, q)]
        } else {
            edge_index[&(q, p)] + 1
        }
    };
    let mut centroid_map = Vec::with_capacity(mesh.n_faces());
    let mut face_nodes = Vec::with_capacity(mesh.n_faces());
    let mut faces = Vec::with_capacity(9 * mesh.n_faces());
    for (fi, &[a, b, c]) in mesh.faces().iter().enumerate() {
        let ci = verts.len();
        verts.push(mesh.face_centroid(fi));
        centroid_map.push(ci);
        let nodes = [a, b, c, third(a, b), third(b, a), third(b, c), third(c, b), third(c, a), third(a, c), ci];
        face_nodes.push(nodes);
        let mut grid = [[usize::MAX; 4]; 4];
        for (k, &(u, v)) in LATTICE.iter().enumerate() {
            grid[u][v] = nodes[k];
        }
        for u in 0..3 {
            for v in 0..3 - u {
                faces.push([grid[u][v], grid[u + 1][v], grid[u][v + 1]]);
                if u + v <= 1 {
                    faces.push([grid[u + 1][v], grid[u + 1][v + 1], grid[u][v + 1]]);
                }
            }
        }
    }
    Ok(SubdividedMesh {
        fine: TriMesh::new(verts, faces)?,
        vertex_map: (0..nv).collect(),
        centroid_map,
        face_nodes,
        coarse_edges: ne,
    })
}
