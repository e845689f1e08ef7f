use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{MeshError, MeshResult, TriMesh, Vec3};

/// A location on the surface: a vertex or a face centroid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SurfacePoint {
    Vertex(usize),
    Centroid(usize),
}

/// Edge graph of a mesh in CSR form with Euclidean edge lengths.
#[derive(Debug, Clone)]
pub struct MeshGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    positions: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    vertex: usize,
    label: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on (dist, vertex)
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MeshGraph {
    pub fn new(mesh: &TriMesh) -> Self {
        let n = mesh.n_vertices();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &[a, b] in &mesh.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        let positions: Vec<Vec3> = mesh.vertices().collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for (i, row) in adj.iter_mut().enumerate() {
            row.sort_unstable();
            for &j in row.iter() {
                targets.push(j);
                weights.push((positions[i] - positions[j]).norm());
            }
            offsets.push(targets.len());
        }
        MeshGraph { offsets, targets, weights, positions, faces: mesh.faces().to_vec() }
    }

    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn position(&self, v: usize) -> Vec3 {
        self.positions[v]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.targets[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    /// Graph seeds representing a surface point: the vertex itself, or the
    /// three corners of a face offset by their straight-line distance.
    pub fn seeds(&self, p: SurfacePoint) -> MeshResult<Vec<(usize, f64)>> {
        match p {
            SurfacePoint::Vertex(v) => {
                if v >= self.n_vertices() {
                    return Err(MeshError::VertexOutOfRange(v));
                }
                Ok(vec![(v, 0.0)])
            }
            SurfacePoint::Centroid(f) => {
                let face = *self.faces.get(f).ok_or(MeshError::FaceOutOfRange(f))?;
                let c = self.point_position(p);
                Ok(face.iter().map(|&v| (v, (self.positions[v] - c).norm())).collect())
            }
        }
    }

    pub fn point_position(&self, p: SurfacePoint) -> Vec3 {
        match p {
            SurfacePoint::Vertex(v) => self.positions[v],
            SurfacePoint::Centroid(f) => {
                let [a, b, c] = self.faces[f];
                (self.positions[a] + self.positions[b] + self.positions[c]) / 3.0
            }
        }
    }

    /// Shortest edge-path distance from `source` to every vertex; unreachable
    /// vertices are `+inf`.
    pub fn distances(&self, source: usize) -> MeshResult<Vec<f64>> {
        if source >= self.n_vertices() {
            return Err(MeshError::VertexOutOfRange(source));
        }
        Ok(self.flood(&[(source, 0.0, 0)]).0)
    }

    /// The k vertices closest to `p` along edges, sorted by distance then index.
    pub fn k_nearest(&self, p: SurfacePoint, k: usize) -> MeshResult<Vec<(usize, f64)>> {
        let seeds: Vec<(usize, f64, usize)> = self.seeds(p)?.into_iter().map(|(v, d)| (v, d, 0)).collect();
        let mut out = Vec::with_capacity(k);
        let n = self.n_vertices();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        for &(v, d, _) in &seeds {
            if d < dist[v] {
                dist[v] = d;
                heap.push(Entry { dist: d, vertex: v, label: 0 });
            }
        }
        while let Some(Entry { dist: d, vertex: u, .. }) = heap.pop() {
            if done[u] || d > dist[u] {
                continue;
            }
            done[u] = true;
            out.push((u, d));
            if out.len() == k {
                break;
            }
            for (w, len) in self.neighbors(u) {
                let nd = d + len;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(Entry { dist: nd, vertex: w, label: 0 });
                }
            }
        }
        Ok(out)
    }

    /// Multi-source Dijkstra; returns distances and the label of the
    /// nearest seed for each vertex.
    fn flood(&self, seeds: &[(usize, f64, usize)]) -> (Vec<f64>, Vec<usize>) {
        let n = self.n_vertices();
        let mut dist = vec![f64::INFINITY; n];
        let mut label = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        for &(v, d, l) in seeds {
            if d < dist[v] || (d == dist[v] && l < label[v]) {
                dist[v] = d;
                label[v] = l;
                heap.push(Entry { dist: d, vertex: v, label: l });
            }
        }
        while let Some(Entry { dist: d, vertex: u, label: l }) = heap.pop() {
            if d > dist[u] || l != label[u] {
                continue;
            }
            for (w, len) in self.neighbors(u) {
                let nd = d + len;
                if nd < dist[w] {
                    dist[w] = nd;
                    label[w] = l;
                    heap.push(Entry { dist: nd, vertex: w, label: l });
                }
            }
        }
        (dist, label)
    }

    /// Exact minimum pairwise graph distance among a set of surface points.
    ///
    /// One multi-source flood labels every vertex with its nearest site; the
    /// shortest path between two distinct sites must cross an edge whose
    /// endpoints carry different labels, or meet at a shared seed vertex.
    pub fn min_pairwise_distance(&self, sites: &[SurfacePoint]) -> MeshResult<f64> {
        if sites.len() < 2 {
            return Ok(f64::INFINITY);
        }
        let mut seeds = Vec::new();
        let mut best = f64::INFINITY;
        for (l, &s) in sites.iter().enumerate() {
            for (v, d) in self.seeds(s)? {
                seeds.push((v, d, l));
            }
        }
        let (dist, label) = self.flood(&seeds);
        // a seed vertex captured by another site
        for &(v, d, l) in &seeds {
            if label[v] != l {
                best = best.min(d + dist[v]);
            }
        }
        for u in 0..self.n_vertices() {
            if !dist[u].is_finite() {
                continue;
            }
            for (w, len) in self.neighbors(u) {
                if w > u && label[w] != label[u] && dist[w].is_finite() {
                    best = best.min(dist[u] + len + dist[w]);
                }
            }
        }
        Ok(best)
    }
}
