//! Triangle meshes: validation, geometry, boundaries, extension, subdivision, geodesics.

mod boundary;
mod extend;
mod geodesic;
mod geometry;
pub mod io;
pub mod shapes;
mod subdivide;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use boundary::{boundary_loops, BoundaryLoop};
pub use extend::{extend_boundaries, ExtendedMesh};
pub use geodesic::{MeshGraph, SurfacePoint};
pub use geometry::{face_geometry, FaceGeometry};
pub use subdivide::{subdivide9, SubdividedMesh, LATTICE};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Smallest admissible face area (mm²).
pub const MIN_FACE_AREA: f64 = 1e-12;

pub type MeshResult<T> = std::result::Result<T, MeshError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("face {face}: vertex index {index} out of range (vertex count {count})")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("face {face}: degenerate (repeated vertex index)")]
    DegenerateFace { face: usize },
    #[error("face {face}: zero area ({area:e} mm^2)")]
    ZeroArea { face: usize, area: f64 },
    #[error("edge ({0}, {1}): inconsistent orientation or non-orientable surface")]
    Orientation(usize, usize),
    #[error("edge ({0}, {1}): shared by more than two faces")]
    NonManifoldEdge(usize, usize),
    #[error("boundary vertex {vertex}: non-manifold boundary near edge ({a}, {b})")]
    NonManifoldBoundary { vertex: usize, a: usize, b: usize },
    #[error("boundary loop starting at vertex {start} has {len} vertices (need at least 3)")]
    ShortLoop { start: usize, len: usize },
    #[error("mesh has no boundary loops to extend")]
    NoBoundary,
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("face {0} out of range")]
    FaceOutOfRange(usize),
    #[error("empty mesh")]
    Empty,
}

/// Validated, consistently oriented triangle mesh (positions in mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    units: String,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> MeshResult<Self> {
        let mesh = TriMesh {
            vertices: vertices.iter().map(|v| [v.x, v.y, v.z]).collect(),
            faces,
            units: "mm".to_string(),
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> MeshResult<()> {
        if self.vertices.is_empty() || self.faces.is_empty() {
            return Err(MeshError::Empty);
        }
        let n = self.vertices.len();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.faces.len());
        for (fi, f) in self.faces.iter().enumerate() {
            for &i in f {
                if i >= n {
                    return Err(MeshError::IndexOutOfRange { face: fi, index: i, count: n });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::DegenerateFace { face: fi });
            }
            let area = self.face_area(fi);
            if !(area > MIN_FACE_AREA) {
                return Err(MeshError::ZeroArea { face: fi, area });
            }
            for k in 0..3 {
                let e = (f[k], f[(k + 1) % 3]);
                if directed.insert(e, fi).is_some() {
                    // same directed edge twice: either flipped neighbour or >2 faces
                    return if directed.contains_key(&(e.1, e.0)) {
                        Err(MeshError::NonManifoldEdge(e.0.min(e.1), e.0.max(e.1)))
                    } else {
                        Err(MeshError::Orientation(e.0.min(e.1), e.0.max(e.1)))
                    };
                }
            }
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn units(&self) -> &str {
        &self.units
    }

    #[inline]
    pub fn vertex(&self, i: usize) -> Vec3 {
        let v = self.vertices[i];
        Vec3::new(v[0], v[1], v[2])
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.vertices.iter().map(|v| Vec3::new(v[0], v[1], v[2]))
    }

    pub fn raw_vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    #[inline]
    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        let (pa, pb, pc) = (self.vertex(a), self.vertex(b), self.vertex(c));
        0.5 * (pb - pa).cross(&(pc - pa)).norm()
    }

    pub fn face_centroid(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f];
        (self.vertex(a) + self.vertex(b) + self.vertex(c)) / 3.0
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_faces()).map(|f| self.face_area(f)).sum()
    }

    /// Undirected edges as (min, max), in order of first appearance over faces.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut seen: HashMap<(usize, usize), ()> = HashMap::with_capacity(3 * self.faces.len() / 2 + 8);
        let mut out = Vec::with_capacity(3 * self.faces.len() / 2 + 8);
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if seen.insert(key, ()).is_none() {
                    out.push([key.0, key.1]);
                }
            }
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        self.edges().len()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let e = self.edges();
        e.iter().map(|&[a, b]| (self.vertex(a) - self.vertex(b)).norm()).sum::<f64>() / e.len() as f64
    }

    /// Bounding-box diagonal (mm), used as the mesh diameter.
    pub fn diameter(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (0..3).map(|k| (hi[k] - lo[k]).powi(2)).sum::<f64>().sqrt()
    }

    /// Area-weighted centre of mass of the surface.
    pub fn area_centroid(&self) -> Vec3 {
        let mut c = Vec3::zeros();
        let mut w = 0.0;
        for f in 0..self.n_faces() {
            let a = self.face_area(f);
            c += a * self.face_centroid(f);
            w += a;
        }
        c / w
    }

    /// Euclidean nearest vertex, ties to the lowest index.
    pub fn nearest_vertex(&self, p: &Vec3) -> usize {
        let mut best = (f64::INFINITY, 0usize);
        for (i, v) in self.vertices().enumerate() {
            let d = (v - p).norm_squared();
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// SHA-256 over vertex bit patterns and face indices (little-endian).
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.vertices.len() as u64).to_le_bytes());
        h.update((self.faces.len() as u64).to_le_bytes());
        for v in &self.vertices {
            for x in v {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        for f in &self.faces {
            for &i in f {
                h.update((i as u64).to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Keep only the listed faces and drop unreferenced vertices (order preserved).
    pub fn submesh(&self, keep_faces: &[usize]) -> MeshResult<TriMesh> {
        let mut remap = vec![usize::MAX; self.n_vertices()];
        let mut used = vec![false; self.n_vertices()];
        for &f in keep_faces {
            for &i in &self.faces[f] {
                used[i] = true;
            }
        }
        let mut verts = Vec::new();
        for (i, u) in used.iter().enumerate() {
            if *u {
                remap[i] = verts.len();
                verts.push(self.vertex(i));
            }
        }
        let faces = keep_faces
            .iter()
            .map(|&f| {
                let [a, b, c] = self.faces[f];
                [remap[a], remap[b], remap[c]]
            })
            .collect();
        TriMesh::new(verts, faces)
    }
}
