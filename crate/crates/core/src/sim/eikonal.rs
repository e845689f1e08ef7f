use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SimError, SpeedField};
use crate::cv::{element_cv, wave_cv, CvVector, WAVE_NEIGHBOURS};
use crate::mesh::{MeshGraph, TriMesh, Vec3};

type V2 = Vector2<f64>;

const NO_FACE: usize = usize::MAX;
const MAX_UNFOLD: usize = 12;
/// Rings around a source seeded with the straight-line estimate.
const INIT_RINGS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct EikonalSolution {
    /// Arrival time (ms) per vertex.
    pub lat: Vec<f64>,
    /// Vertices in acceptance order.
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthField {
    pub lat: Vec<f64>,
    pub sources: Vec<usize>,
    pub element: Vec<CvVector>,
    pub wave: Vec<CvVector>,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

struct Marcher<'a> {
    mesh: &'a TriMesh,
    slowness: Vec<f64>,
    vertex_faces: Vec<Vec<usize>>,
    edge_faces: HashMap<(usize, usize), [usize; 2]>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn cross(a: &V2, b: &V2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// min over s in (0,1) of tp + s (tq − tp) + f |p + s (q − p)|, C at the
/// origin; infinite when the minimum sits on an endpoint.
fn segment_update(p: &V2, tp: f64, q: &V2, tq: f64, f: f64) -> f64 {
    let d = q - p;
    let (alpha, beta, gamma) = (d.dot(&d), p.dot(&d), p.dot(p));
    let r = (tq - tp) / f;
    if r * r >= alpha {
        return f64::INFINITY;
    }
    let det = (alpha * gamma - beta * beta).max(0.0);
    let s = (-beta - r * (det / (alpha - r * r)).sqrt()) / alpha;
    if !(s > 0.0 && s < 1.0) {
        return f64::INFINITY;
    }
    tp + s * (tq - tp) + f * (p + s * d).norm()
}

impl<'a> Marcher<'a> {
    fn new(mesh: &'a TriMesh, speed: &[f64]) -> Self {
        let mut vertex_faces = vec![Vec::new(); mesh.n_vertices()];
        let mut edge_faces: HashMap<(usize, usize), [usize; 2]> = HashMap::new();
        for (f, tri) in mesh.faces().iter().enumerate() {
            for k in 0..3 {
                vertex_faces[tri[k]].push(f);
                let e = edge_faces.entry(key(tri[k], tri[(k + 1) % 3])).or_insert([NO_FACE; 2]);
                if e[0] == NO_FACE {
                    e[0] = f;
                } else {
                    e[1] = f;
                }
            }
        }
        Marcher { mesh, slowness: speed.iter().map(|c| 1.0 / c).collect(), vertex_faces, edge_faces }
    }

    fn third(&self, f: usize, a: usize, b: usize) -> usize {
        let t = self.mesh.face(f);
        t.into_iter().find(|&v| v != a && v != b).expect("triangle")
    }

    /// Walk across faces opposite C until a vertex lands strictly inside the
    /// angle at C, in the unfolded plane.
    fn unfold(&self, face: usize, a: usize, b: usize, a2: V2, b2: V2) -> Option<(usize, V2)> {
        let s = cross(&a2, &b2);
        let (mut p, mut q, mut p2, mut q2, mut f) = (a, b, a2, b2, face);
        for _ in 0..MAX_UNFOLD {
            let fs = self.edge_faces.get(&key(p, q))?;
            let g = if fs[0] == f { fs[1] } else { fs[0] };
            if g == NO_FACE {
                return None;
            }
            let v = self.third(g, p, q);
            let (pv, qv) = (self.mesh.vertex(p), self.mesh.vertex(q));
            let x3 = self.mesh.vertex(v);
            let (dp, dq) = ((x3 - pv).norm(), (x3 - qv).norm());
            let e = q2 - p2;
            let len = e.norm();
            let u = e / len;
            let x = (dp * dp - dq * dq + len * len) / (2.0 * len);
            let h = (dp * dp - x * x).max(0.0).sqrt();
            let mut perp = V2::new(-u.y, u.x);
            if perp.dot(&(-p2)) > 0.0 {
                perp = -perp;
            }
            let v2 = p2 + u * x + perp * h;
            let (ca, cb) = (cross(&a2, &v2) * s, cross(&v2, &b2) * s);
            if ca > 0.0 && cb > 0.0 {
                return Some((v, v2));
            }
            if ca <= 0.0 {
                p = v;
                p2 = v2;
            } else {
                q = v;
                q2 = v2;
            }
            f = g;
        }
        None
    }

    fn update(&self, c: usize, face: usize, t: &[f64], known: &[bool]) -> f64 {
        let [i, j, k] = self.mesh.face(face);
        let (a, b) = if i == c { (j, k) } else if j == c { (k, i) } else { (i, j) };
        let pc = self.mesh.vertex(c);
        let (va, vb) = (self.mesh.vertex(a) - pc, self.mesh.vertex(b) - pc);
        let sl = &self.slowness;
        let mut best = f64::INFINITY;
        for (n, v) in [(a, va), (b, vb)] {
            if known[n] {
                best = best.min(t[n] + 0.5 * (sl[c] + sl[n]) * v.norm());
            }
        }
        if !(known[a] && known[b]) {
            return best;
        }
        let (la, lb) = (va.norm(), vb.norm());
        let cos = va.dot(&vb) / (la * lb);
        let sin = va.cross(&vb).norm() / (la * lb);
        let a2 = V2::new(la, 0.0);
        let b2 = V2::new(lb * cos, lb * sin);
        let mut tri = |p: &V2, tp: f64, q: &V2, tq: f64, f: f64| {
            let v = segment_update(p, tp, q, tq, f);
            if v.is_finite() && v >= tp.max(tq) {
                best = best.min(v);
            }
        };
        if cos >= 0.0 {
            tri(&a2, t[a], &b2, t[b], (sl[c] + sl[a] + sl[b]) / 3.0);
        } else if let Some((d, d2)) = self.unfold(face, a, b, a2, b2) {
            if known[d] {
                tri(&a2, t[a], &d2, t[d], (sl[c] + sl[a] + sl[d]) / 3.0);
                tri(&d2, t[d], &b2, t[b], (sl[c] + sl[d] + sl[b]) / 3.0);
            }
        }
        best
    }

    fn run(&self, source: usize) -> EikonalSolution {
        let n = self.mesh.n_vertices();
        let mut t = vec![f64::INFINITY; n];
        let mut known = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut heap = BinaryHeap::new();
        t[source] = 0.0;
        heap.push(Entry(0.0, source));
        // rings around the source: straight-line estimate
        let ps = self.mesh.vertex(source);
        let mut ring: Vec<usize> = vec![source];
        for _ in 0..INIT_RINGS {
            let frontier = ring.clone();
            for v in frontier {
                for &f in &self.vertex_faces[v] {
                    ring.extend(self.mesh.face(f));
                }
            }
            ring.sort_unstable();
            ring.dedup();
        }
        for v in ring {
            if v != source {
                let est = (self.mesh.vertex(v) - ps).norm() * 0.5 * (self.slowness[source] + self.slowness[v]);
                if est < t[v] {
                    t[v] = est;
                    heap.push(Entry(est, v));
                }
            }
        }
        while let Some(Entry(tv, v)) = heap.pop() {
            if known[v] || tv > t[v] {
                continue;
            }
            known[v] = true;
            order.push(v);
            for &f in &self.vertex_faces[v] {
                for c in self.mesh.face(f) {
                    if known[c] {
                        continue;
                    }
                    let cand = self.update(c, f, &t, &known);
                    if cand < t[c] {
                        t[c] = cand;
                        heap.push(Entry(cand, c));
                    }
                }
            }
        }
        EikonalSolution { lat: t, order }
    }
}

/// First-arrival times from `sources`: the pointwise minimum of
/// single-source marches. For several sources `order` is sorted by time.
pub fn fast_march(mesh: &TriMesh, speed: &[f64], sources: &[usize]) -> Result<EikonalSolution, SimError> {
    if sources.is_empty() {
        return Err(SimError::NoSources);
    }
    if let Some(&s) = sources.iter().find(|&&s| s >= mesh.n_vertices()) {
        return Err(SimError::BadSource(s));
    }
    if speed.len() != mesh.n_vertices() || speed.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
        return Err(SimError::BadSpeed("speed must be positive and finite at every vertex".into()));
    }
    let m = Marcher::new(mesh, speed);
    let mut sol = m.run(sources[0]);
    if sources.len() > 1 {
        for &s in &sources[1..] {
            let other = m.run(s);
            for (a, b) in sol.lat.iter_mut().zip(other.lat) {
                *a = a.min(b);
            }
        }
        let mut order: Vec<usize> = (0..sol.lat.len()).filter(|&v| sol.lat[v].is_finite()).collect();
        order.sort_by(|&a, &b| sol.lat[a].total_cmp(&sol.lat[b]).then(a.cmp(&b)));
        sol.order = order;
    }
    let unreached: Vec<usize> = (0..sol.lat.len()).filter(|&v| !sol.lat[v].is_finite()).collect();
    if !unreached.is_empty() {
        return Err(SimError::Unreached(unreached));
    }
    Ok(sol)
}

/// Ground truth: activation times plus element and wave CV per face.
pub fn eikonal_lat(mesh: &TriMesh, speed: &SpeedField, sources: &[usize]) -> Result<TruthField, SimError> {
    let sol = fast_march(mesh, &speed.speed, sources)?;
    let lat = sol.lat;
    let element = (0..mesh.n_faces())
        .into_par_iter()
        .map(|f| {
            let tri = mesh.face(f);
            let p: [Vec3; 3] = tri.map(|v| mesh.vertex(v));
            element_cv(p, tri.map(|v| lat[v])).expect("validated mesh has no degenerate faces")
        })
        .collect();
    let graph = MeshGraph::new(mesh);
    let wave = (0..mesh.n_faces())
        .into_par_iter()
        .map(|f| wave_cv(&graph, mesh, &lat, f, WAVE_NEIGHBOURS))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TruthField { lat, sources: sources.to_vec(), element, wave })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_update_planar_front() {
        // front arriving along +y: T = y, C at origin, p and q below
        let p = V2::new(-1.0, -1.0);
        let q = V2::new(1.0, -1.0);
        let v = segment_update(&p, -1.0 + 5.0, &q, -1.0 + 5.0, 1.0);
        assert!((v - 5.0).abs() < 1e-12);
    }

    #[test]
    fn line_graph_times() {
        let mesh = crate::mesh::shapes::rect_grid(21, 2, 20.0, 1.0);
        let sol = fast_march(&mesh, &vec![2.0; mesh.n_vertices()], &[0]).unwrap();
        assert!(sol.order.windows(2).all(|w| sol.lat[w[0]] <= sol.lat[w[1]]));
        let far = mesh.nearest_vertex(&Vec3::new(20.0, 0.0, 0.0));
        assert!((sol.lat[far] - 10.0).abs() < 0.05, "{}", sol.lat[far]);
    }
}
