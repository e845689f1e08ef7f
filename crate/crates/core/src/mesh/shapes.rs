//! Procedural test meshes (all lengths in mm).

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{boundary_loops, MeshError, TriMesh, Vec3};

/// `n`×`n` vertex grid over a square of side `size` in the z=0 plane.
pub fn square_grid(n: usize, size: f64) -> TriMesh {
    rect_grid(n, n, size, size)
}

pub fn rect_grid(nx: usize, ny: usize, width: f64, height: f64) -> TriMesh {
    assert!(nx >= 2 && ny >= 2);
    let mut v = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            v.push(Vec3::new(width * i as f64 / (nx - 1) as f64, height * j as f64 / (ny - 1) as f64, 0.0));
        }
    }
    let mut f = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = i + nx * j;
            let (b, c, d) = (a + 1, a + 1 + nx, a + nx);
            f.push([a, b, c]);
            f.push([a, c, d]);
        }
    }
    TriMesh::new(v, f).expect("grid is valid")
}

/// Flat disc in the z=0 plane: a centre vertex plus `rings` concentric rings
/// of 6k vertices at radius k·radius/rings.
pub fn disc(radius: f64, rings: usize) -> TriMesh {
    assert!(rings >= 1);
    let h = radius / rings as f64;
    let mut v = vec![Vec3::zeros()];
    let mut ring_start = vec![0usize];
    for k in 1..=rings {
        ring_start.push(v.len());
        for t in 0..6 * k {
            let a = 2.0 * PI * t as f64 / (6 * k) as f64;
            v.push(Vec3::new(k as f64 * h * a.cos(), k as f64 * h * a.sin(), 0.0));
        }
    }
    let mut f = Vec::new();
    for k in 1..=rings {
        let outer = |s: usize, t: usize| ring_start[k] + (s * k + t) % (6 * k);
        let inner = |s: usize, t: usize| {
            if k == 1 {
                0
            } else {
                ring_start[k - 1] + (s * (k - 1) + t) % (6 * (k - 1))
            }
        };
        for s in 0..6 {
            for t in 0..k {
                f.push([inner(s, t), outer(s, t), outer(s, t + 1)]);
                if t + 1 < k {
                    f.push([inner(s, t), outer(s, t + 1), inner(s, t + 1)]);
                }
            }
        }
    }
    orient_up(&v, &mut f);
    TriMesh::new(v, f).expect("disc is valid")
}

fn orient_up(v: &[Vec3], f: &mut [[usize; 3]]) {
    for t in f.iter_mut() {
        let n = (v[t[1]] - v[t[0]]).cross(&(v[t[2]] - v[t[0]]));
        if n.z < 0.0 {
            t.swap(1, 2);
        }
    }
}

/// Outward-oriented icosphere with 10·4^level + 2 vertices.
pub fn icosphere(radius: f64, level: usize) -> TriMesh {
    let (v, f) = icosphere_raw(level);
    TriMesh::new(v.into_iter().map(|p| p * radius).collect(), f).expect("icosphere is valid")
}

fn icosphere_raw(level: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vec3> = [
        (-1.0, t, 0.0), (1.0, t, 0.0), (-1.0, -t, 0.0), (1.0, -t, 0.0),
        (0.0, -1.0, t), (0.0, 1.0, t), (0.0, -1.0, -t), (0.0, 1.0, -t),
        (t, 0.0, -1.0), (t, 0.0, 1.0), (-t, 0.0, -1.0), (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut get = |a: usize, b: usize, v: &mut Vec<Vec3>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(((v[a] + v[b]) * 0.5).normalize());
                v.len() - 1
            })
        };
        let mut nf = Vec::with_capacity(4 * f.len());
        for &[a, b, c] in &f {
            let ab = get(a, b, &mut v);
            let bc = get(b, c, &mut v);
            let ca = get(c, a, &mut v);
            nf.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = nf;
    }
    for t in f.iter_mut() {
        let n = (v[t[1]] - v[t[0]]).cross(&(v[t[2]] - v[t[0]]));
        if n.dot(&v[t[0]]) < 0.0 {
            t.swap(1, 2);
        }
    }
    (v, f)
}

/// Open tube around the z axis, `n_up` rows of faces between z=0 and z=height.
pub fn cylinder(radius: f64, height: f64, n_around: usize, n_up: usize) -> TriMesh {
    let mut v = Vec::new();
    for j in 0..=n_up {
        for i in 0..n_around {
            let a = 2.0 * PI * i as f64 / n_around as f64;
            v.push(Vec3::new(radius * a.cos(), radius * a.sin(), height * j as f64 / n_up as f64));
        }
    }
    let mut f = Vec::new();
    for j in 0..n_up {
        for i in 0..n_around {
            let a = j * n_around + i;
            let b = j * n_around + (i + 1) % n_around;
            let (c, d) = (b + n_around, a + n_around);
            f.push([a, b, c]);
            f.push([a, c, d]);
        }
    }
    TriMesh::new(v, f).expect("cylinder is valid")
}

/// Icosphere with every vertex failing `keep(direction)` removed, cleaned so
/// that each hole is bounded by a simple loop.
pub fn sphere_region(radius: f64, level: usize, keep: impl Fn(&Vec3) -> bool) -> TriMesh {
    let (v, f) = icosphere_raw(level);
    let mut faces: Vec<usize> =
        (0..f.len()).filter(|&i| f[i].iter().all(|&k| keep(&v[k]))).collect();
    let full = TriMesh::new(v.iter().map(|p| p * radius).collect(), f.clone()).expect("icosphere is valid");
    loop {
        let m = full.submesh(&faces).expect("region is a valid mesh");
        match boundary_loops(&m) {
            Ok(_) => return m,
            Err(MeshError::NonManifoldBoundary { vertex, .. }) => {
                // remove the pinch: every kept face touching that position
                let p = m.vertex(vertex);
                faces.retain(|&fi| !full.face(fi).iter().any(|&k| (full.vertex(k) - p).norm() == 0.0));
            }
            Err(e) => panic!("unexpected mesh error {e}"),
        }
    }
}

/// Spherical cap of the given half angle (radians) around +z.
pub fn spherical_cap(radius: f64, half_angle: f64, level: usize) -> TriMesh {
    let c = half_angle.cos();
    sphere_region(radius, level, move |d| d.z >= c)
}

/// Atrium-like closed-ish surface: sphere of `radius` with four small
/// vein-like holes and one larger valve-like hole.
pub fn atrium(radius: f64, level: usize) -> TriMesh {
    let holes: Vec<(Vec3, f64)> = vec![
        (Vec3::new(0.55, 0.45, 0.7).normalize(), 5.0 / radius),
        (Vec3::new(-0.55, 0.45, 0.7).normalize(), 5.0 / radius),
        (Vec3::new(0.6, 0.5, -0.1).normalize(), 5.0 / radius),
        (Vec3::new(-0.6, 0.5, -0.1).normalize(), 5.0 / radius),
        (Vec3::new(0.0, -0.6, -0.8).normalize(), 10.0 / radius),
    ];
    sphere_region(radius, level, move |d| holes.iter().all(|(h, a)| d.dot(h) < a.cos()))
}
