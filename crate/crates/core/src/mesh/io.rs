//! OFF and ASCII PLY readers and writers.

use std::fmt::Write as _;
use std::path::Path;

use super::{MeshError, TriMesh, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    PlyAscii,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(MeshFormat::Off),
            "ply" => Some(MeshFormat::PlyAscii),
            _ => None,
        }
    }
}

pub fn load_mesh(path: impl AsRef<Path>, format: Option<MeshFormat>) -> Result<TriMesh> {
    let path = path.as_ref();
    let format = format
        .or_else(|| MeshFormat::from_path(path))
        .ok_or_else(|| Error::InvalidArgument(format!("cannot infer mesh format of {}", path.display())))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mesh = match format {
        MeshFormat::Off => parse_off(&text)?,
        MeshFormat::PlyAscii => parse_ply(&text)?,
    };
    Ok(mesh)
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>, format: Option<MeshFormat>) -> Result<()> {
    let path = path.as_ref();
    let format = format.or_else(|| MeshFormat::from_path(path)).unwrap_or(MeshFormat::Off);
    let text = match format {
        MeshFormat::Off => to_off(mesh),
        MeshFormat::PlyAscii => to_ply(mesh),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn perr(line: usize, msg: impl Into<String>) -> MeshError {
    MeshError::Parse { line, msg: msg.into() }
}

/// Non-empty, comment-stripped lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> std::result::Result<T, MeshError> {
    tok.ok_or_else(|| perr(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| perr(line, format!("bad {what}")))
}

pub fn parse_off(text: &str) -> std::result::Result<TriMesh, MeshError> {
    let mut lines = content_lines(text);
    let (l0, head) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    let mut toks: Vec<&str> = head.split_whitespace().collect();
    if toks.first() != Some(&"OFF") {
        return Err(perr(l0, "missing OFF header"));
    }
    toks.remove(0);
    let (lc, counts) = if toks.is_empty() {
        lines.next().ok_or_else(|| perr(l0, "missing counts"))?
    } else {
        (l0, "")
    };
    let counts: Vec<&str> = if toks.is_empty() { counts.split_whitespace().collect() } else { toks };
    let nv: usize = num(counts.first().copied(), lc, "vertex count")?;
    let nf: usize = num(counts.get(1).copied(), lc, "face count")?;
    let mut verts = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| perr(lc, "fewer vertices than declared"))?;
        let mut it = l.split_whitespace();
        verts.push(Vec3::new(num(it.next(), ln, "x")?, num(it.next(), ln, "y")?, num(it.next(), ln, "z")?));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| perr(lc, "fewer faces than declared"))?;
        faces.push(parse_face(l, ln)?);
    }
    TriMesh::new(verts, faces)
}

fn parse_face(l: &str, ln: usize) -> std::result::Result<[usize; 3], MeshError> {
    let mut it = l.split_whitespace();
    let k: usize = num(it.next(), ln, "face arity")?;
    if k != 3 {
        return Err(perr(ln, format!("face with {k} vertices (only triangles supported)")));
    }
    Ok([num(it.next(), ln, "index")?, num(it.next(), ln, "index")?, num(it.next(), ln, "index")?])
}

pub fn parse_ply(text: &str) -> std::result::Result<TriMesh, MeshError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(perr(1, "missing ply magic")),
    }
    let mut nv = None;
    let mut nf = None;
    let mut props: Vec<String> = Vec::new();
    let mut current = "";
    let mut ln_end = 1;
    for (ln, l) in lines.by_ref() {
        ln_end = ln;
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => return Err(perr(ln, "only ascii PLY is supported")),
            ["element", "vertex", n] => {
                nv = Some(n.parse::<usize>().map_err(|_| perr(ln, "bad vertex count"))?);
                current = "vertex";
            }
            ["element", "face", n] => {
                nf = Some(n.parse::<usize>().map_err(|_| perr(ln, "bad face count"))?);
                current = "face";
            }
            ["element", ..] => current = "other",
            ["property", .., name] if current == "vertex" => props.push(name.to_string()),
            ["end_header"] => break,
            _ => {}
        }
    }
    let nv = nv.ok_or_else(|| perr(ln_end, "no vertex element"))?;
    let nf = nf.ok_or_else(|| perr(ln_end, "no face element"))?;
    let pos = |name: &str| props.iter().position(|p| p == name).ok_or_else(|| perr(ln_end, format!("no {name} property")));
    let (ix, iy, iz) = (pos("x")?, pos("y")?, pos("z")?);
    let mut body = lines.filter(|(_, l)| !l.is_empty());
    let mut verts = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = body.next().ok_or_else(|| perr(ln_end, "fewer vertices than declared"))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        verts.push(Vec3::new(
            num(t.get(ix).copied(), ln, "x")?,
            num(t.get(iy).copied(), ln, "y")?,
            num(t.get(iz).copied(), ln, "z")?,
        ));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = body.next().ok_or_else(|| perr(ln_end, "fewer faces than declared"))?;
        faces.push(parse_face(l, ln)?);
    }
    TriMesh::new(verts, faces)
}

pub fn to_off(mesh: &TriMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF\n{} {} {}", mesh.n_vertices(), mesh.n_faces(), mesh.n_edges());
    for v in mesh.raw_vertices() {
        let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn to_ply(mesh: &TriMesh) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n\
         element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.n_vertices(),
        mesh.n_faces()
    );
    for v in mesh.raw_vertices() {
        let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn off_single_triangle() {
        let m = parse_off("OFF\n# comment\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!((m.n_vertices(), m.n_faces(), m.n_edges()), (3, 1, 3));
    }

    #[test]
    fn off_index_out_of_range() {
        let e = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 3\n").unwrap_err();
        assert!(e.to_string().contains("out of range"), "{e}");
    }

    #[test]
    fn malformed_counts() {
        assert!(matches!(parse_off("OFF\n3 x 0\n"), Err(MeshError::Parse { line: 2, .. })));
        assert!(matches!(parse_off("OFF\n3 1 0\n0 0 0\n"), Err(MeshError::Parse { .. })));
    }

    #[test]
    fn roundtrip_is_exact() {
        let m = shapes::icosphere(25.0, 2);
        assert_eq!(parse_off(&to_off(&m)).unwrap(), m);
        assert_eq!(parse_ply(&to_ply(&m)).unwrap(), m);
    }

    #[test]
    fn ply_with_extra_properties() {
        let t = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float nx\nproperty float x\nproperty float y\nproperty float z\n\
                 element face 1\nproperty list uchar int vertex_indices\nend_header\n9 0 0 0\n9 1 0 0\n9 0 1 0\n3 0 1 2\n";
        let m = parse_ply(t).unwrap();
        assert_eq!(m.vertex(1), Vec3::x());
    }
}
