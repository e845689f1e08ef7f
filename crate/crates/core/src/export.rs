//! CSV and legacy-VTK file formats. Floats are written with Rust's
//! shortest round-trip formatting so reruns are byte-identical.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cv::{CvSummary, CvVector};
use crate::gp::{ObservationSet, PosteriorField};
use crate::mesh::{SurfacePoint, TriMesh, Vec3};
use crate::sim::TruthField;
use crate::{Error, Result};

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json { path: path.display().to_string(), source: e })?;
    write_text(path, &(text + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json { path: path.display().to_string(), source: e })
}

/// Header-indexed rows of a CSV file.
struct Table {
    path: String,
    cols: HashMap<String, usize>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Table> {
        let p = path.display().to_string();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Csv { path: p.clone(), msg: e.to_string() })?;
        let headers = rdr.headers().map_err(|e| Error::Csv { path: p.clone(), msg: e.to_string() })?.clone();
        let cols = headers.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect();
        let rows = rdr
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Csv { path: p.clone(), msg: e.to_string() })?;
        Ok(Table { path: p, cols, rows })
    }

    fn has(&self, col: &str) -> bool {
        self.cols.contains_key(col)
    }

    fn require(&self, col: &str) -> Result<usize> {
        self.cols
            .get(col)
            .copied()
            .ok_or_else(|| Error::Schema { path: self.path.clone(), msg: format!("missing column {col}") })
    }

    fn parse<T: std::str::FromStr>(&self, row: usize, col: usize) -> Result<T> {
        let s = self.rows[row].get(col).unwrap_or("");
        s.parse().map_err(|_| Error::Csv { path: self.path.clone(), msg: format!("row {}: cannot parse {s:?}", row + 2) })
    }

    fn column<T: std::str::FromStr>(&self, col: &str) -> Result<Vec<T>> {
        let c = self.require(col)?;
        (0..self.rows.len()).map(|r| self.parse(r, c)).collect()
    }
}

pub fn write_obs_csv(path: impl AsRef<Path>, obs: &ObservationSet) -> Result<()> {
    let mut s = String::from("vertex_id,lat_ms,sigma_ms\n");
    for i in 0..obs.len() {
        let _ = writeln!(s, "{},{},{}", obs.vertices[i], obs.y[i], obs.sigma[i]);
    }
    write_text(path.as_ref(), &s)
}

/// A missing `sigma_ms` column means noiseless readings (the nugget then
/// carries all noise).
pub fn read_obs_csv(path: impl AsRef<Path>) -> Result<ObservationSet> {
    let t = Table::read(path.as_ref())?;
    let vertices = t.column("vertex_id")?;
    let y = t.column("lat_ms")?;
    let sigma = if t.has("sigma_ms") { t.column("sigma_ms")? } else { vec![0.0; t.rows.len()] };
    Ok(ObservationSet::new(vertices, y, sigma)?)
}

pub fn write_posterior_csv(path: impl AsRef<Path>, field: &PosteriorField) -> Result<()> {
    let mut s = String::from("point_id,kind,mean_ms,sd_ms\n");
    for (i, p) in field.points.iter().enumerate() {
        let (id, kind) = match *p {
            SurfacePoint::Vertex(v) => (v, "vertex"),
            SurfacePoint::Centroid(f) => (f, "centroid"),
        };
        let _ = writeln!(s, "{id},{kind},{},{}", field.mean[i], field.var[i].sqrt());
    }
    write_text(path.as_ref(), &s)
}

/// Returns (points, mean, sd).
pub fn read_posterior_csv(path: impl AsRef<Path>) -> Result<(Vec<SurfacePoint>, Vec<f64>, Vec<f64>)> {
    let t = Table::read(path.as_ref())?;
    let ids: Vec<usize> = t.column("point_id")?;
    let kinds: Vec<String> = t.column("kind")?;
    let points = ids
        .iter()
        .zip(&kinds)
        .map(|(&id, k)| match k.as_str() {
            "vertex" => Ok(SurfacePoint::Vertex(id)),
            "centroid" => Ok(SurfacePoint::Centroid(id)),
            other => Err(Error::Schema { path: t.path.clone(), msg: format!("unknown kind {other}") }),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((points, t.column("mean_ms")?, t.column("sd_ms")?))
}

const PCT_TAGS: [&str; 5] = ["p09", "p25", "p50", "p75", "p91"];

pub fn write_cv_csv(path: impl AsRef<Path>, cv: &CvSummary) -> Result<()> {
    let mut s = String::from("face_id,grad_mean,grad_sd");
    for pre in ["grad", "cv"] {
        for t in PCT_TAGS {
            let _ = write!(s, ",{pre}_{t}");
        }
    }
    s.push_str(",cv_iqr,undefined\n");
    for c in &cv.centroids {
        let _ = write!(s, "{},{},{}", c.face, c.grad_mean, c.grad_sd);
        for v in c.grad_pct.iter().chain(&c.cv_pct) {
            let _ = write!(s, ",{v}");
        }
        let _ = writeln!(s, ",{},{}", c.cv_iqr, u8::from(c.undefined));
    }
    write_text(path.as_ref(), &s)
}

/// Gradient-magnitude channels of a CV table: (faces, grad_mean, grad_sd).
pub fn read_cv_csv(path: impl AsRef<Path>) -> Result<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    let t = Table::read(path.as_ref())?;
    Ok((t.column("face_id")?, t.column("grad_mean")?, t.column("grad_sd")?))
}

pub const TRUTH_LAT: &str = "lat.csv";
pub const TRUTH_CV: &str = "cv.csv";

pub fn write_truth(dir: impl AsRef<Path>, truth: &TruthField) -> Result<Vec<String>> {
    let dir = dir.as_ref();
    let mut s = String::from("vertex_id,lat_ms\n");
    for (v, t) in truth.lat.iter().enumerate() {
        let _ = writeln!(s, "{v},{t}");
    }
    write_text(&dir.join(TRUTH_LAT), &s)?;
    let mut s = String::from("face_id");
    for m in ["element", "wave"] {
        let _ = write!(s, ",{m}_gx,{m}_gy,{m}_gz,{m}_cvx,{m}_cvy,{m}_cvz,{m}_undefined");
    }
    s.push('\n');
    for f in 0..truth.element.len() {
        let _ = write!(s, "{f}");
        for c in [&truth.element[f], &truth.wave[f]] {
            let g = c.gradient;
            let v = c.cv.unwrap_or_else(Vec3::zeros);
            let _ = write!(s, ",{},{},{},{},{},{},{}", g.x, g.y, g.z, v.x, v.y, v.z, u8::from(c.cv.is_none()));
        }
        s.push('\n');
    }
    write_text(&dir.join(TRUTH_CV), &s)?;
    Ok([TRUTH_LAT, TRUTH_CV].iter().map(|f| dir.join(f).display().to_string()).collect())
}

pub fn read_truth_lat(dir: impl AsRef<Path>) -> Result<Vec<f64>> {
    let t = Table::read(&dir.as_ref().join(TRUTH_LAT))?;
    let ids: Vec<usize> = t.column("vertex_id")?;
    if ids.iter().enumerate().any(|(i, &v)| i != v) {
        return Err(Error::Schema { path: t.path.clone(), msg: "vertex ids must be 0..n in order".into() });
    }
    t.column("lat_ms")
}

/// Truth gradient fields (element, wave) per face.
pub fn read_truth_gradients(dir: impl AsRef<Path>) -> Result<(Vec<CvVector>, Vec<CvVector>)> {
    let t = Table::read(&dir.as_ref().join(TRUTH_CV))?;
    let mut out = Vec::new();
    for m in ["element", "wave"] {
        let g: Vec<Vec<f64>> = ["gx", "gy", "gz"].iter().map(|c| t.column(&format!("{m}_{c}"))).collect::<Result<_>>()?;
        out.push((0..t.rows.len()).map(|f| CvVector::from_gradient(Vec3::new(g[0][f], g[1][f], g[2][f]))).collect());
    }
    let wave = out.pop().unwrap();
    Ok((out.pop().unwrap(), wave))
}

/// Legacy ASCII VTK unstructured grid with optional point scalars, cell
/// scalars and cell vectors.
pub fn write_vtk(
    path: impl AsRef<Path>,
    mesh: &TriMesh,
    point_scalars: &[(&str, &[f64])],
    cell_scalars: &[(&str, &[f64])],
    cell_vectors: &[(&str, &[Vec3])],
) -> Result<()> {
    let mut s = String::from("# vtk DataFile Version 3.0\ngpmi\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.n_vertices());
    for p in mesh.raw_vertices() {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
    }
    let nf = mesh.n_faces();
    let _ = writeln!(s, "CELLS {nf} {}", 4 * nf);
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nf}");
    for _ in 0..nf {
        s.push_str("5\n");
    }
    if !point_scalars.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.n_vertices());
        for (name, v) in point_scalars {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for x in v.iter() {
                let _ = writeln!(s, "{x}");
            }
        }
    }
    if !cell_scalars.is_empty() || !cell_vectors.is_empty() {
        let _ = writeln!(s, "CELL_DATA {nf}");
        for (name, v) in cell_scalars {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for x in v.iter() {
                let _ = writeln!(s, "{x}");
            }
        }
        for (name, v) in cell_vectors {
            let _ = writeln!(s, "VECTORS {name} double");
            for x in v.iter() {
                let _ = writeln!(s, "{} {} {}", x.x, x.y, x.z);
            }
        }
    }
    write_text(path.as_ref(), &s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obs_roundtrip_and_missing_sigma() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("obs.csv");
        let o = ObservationSet::new(vec![4, 1], vec![0.1 + 0.2, -3.5e-9], vec![1.0, 0.25]).unwrap();
        write_obs_csv(&p, &o).unwrap();
        assert_eq!(read_obs_csv(&p).unwrap(), o);
        std::fs::write(&p, "vertex_id,lat_ms\n3,7.5\n").unwrap();
        let o = read_obs_csv(&p).unwrap();
        assert_eq!(o.sigma, vec![0.0]);
        std::fs::write(&p, "vertex,lat_ms\n3,7.5\n").unwrap();
        assert!(matches!(read_obs_csv(&p), Err(Error::Schema { .. })));
    }
}
