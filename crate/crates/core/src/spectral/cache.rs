//! On-disk basis cache: `basis.json` manifest plus little-endian f64 column
//! blocks. `grad_phi_c.bin` stores, for each eigenfunction, the x, y and z
//! gradient columns in turn.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::{BasisProvenance, EigenBasis, GradientField};
use crate::{Error, Result};

pub const MANIFEST: &str = "basis.json";
pub const FORMAT: &str = "gpmi-basis-v1";
const PHI_V: &str = "phi_v.bin";
const PHI_C: &str = "phi_c.bin";
const GRAD_C: &str = "grad_phi_c.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisManifest {
    pub format: String,
    #[serde(flatten)]
    pub provenance: BasisProvenance,
    pub lambdas: Vec<f64>,
    pub files: Vec<String>,
}

pub fn basis_files() -> [&'static str; 4] {
    [MANIFEST, PHI_V, PHI_C, GRAD_C]
}

fn write_columns(path: &Path, mats: &[&Mat<f64>], interleave: bool) -> Result<()> {
    let m = mats[0].ncols();
    let rows = mats[0].nrows();
    let mut buf = Vec::with_capacity(8 * rows * m * mats.len());
    let mut push = |a: &Mat<f64>, k: usize| {
        for v in a.col_as_slice(k) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    };
    if interleave {
        for k in 0..m {
            for a in mats {
                push(a, k);
            }
        }
    } else {
        for k in 0..m {
            push(mats[0], k);
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

fn read_columns(path: &Path, rows: usize, m: usize, count: usize) -> Result<Vec<Mat<f64>>> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() != 8 * rows * m * count {
        return Err(Error::Schema {
            path: path.display().to_string(),
            msg: format!("expected {} bytes, found {}", 8 * rows * m * count, bytes.len()),
        });
    }
    let mut out: Vec<Mat<f64>> = (0..count).map(|_| Mat::zeros(rows, m)).collect();
    let mut off = 0;
    for k in 0..m {
        for mat in out.iter_mut() {
            for v in mat.col_as_slice_mut(k) {
                *v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
                off += 8;
            }
        }
    }
    Ok(out)
}

pub fn save_basis(dir: impl AsRef<Path>, basis: &EigenBasis) -> Result<Vec<String>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_columns(&dir.join(PHI_V), &[&basis.phi_v], false)?;
    write_columns(&dir.join(PHI_C), &[&basis.phi_c], false)?;
    write_columns(&dir.join(GRAD_C), &[&basis.grad_c.gx, &basis.grad_c.gy, &basis.grad_c.gz], true)?;
    let manifest = BasisManifest {
        format: FORMAT.into(),
        provenance: basis.provenance.clone(),
        lambdas: basis.lambdas.clone(),
        files: vec![PHI_V.into(), PHI_C.into(), GRAD_C.into()],
    };
    let path = dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Json { path: path.display().to_string(), source: e })?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(basis_files().iter().map(|f| dir.join(f).display().to_string()).collect())
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<BasisManifest> {
    let path = dir.as_ref().join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: BasisManifest =
        serde_json::from_str(&text).map_err(|e| Error::Json { path: path.display().to_string(), source: e })?;
    if m.format != FORMAT {
        return Err(Error::Schema { path: path.display().to_string(), msg: format!("unknown format {}", m.format) });
    }
    if m.lambdas.len() != m.provenance.num_basis {
        return Err(Error::Schema { path: path.display().to_string(), msg: "lambda count differs from num_basis".into() });
    }
    Ok(m)
}

pub fn load_basis(dir: impl AsRef<Path>) -> Result<EigenBasis> {
    let dir = dir.as_ref();
    let man = read_manifest(dir)?;
    let p = &man.provenance;
    let m = p.num_basis;
    let phi_v = read_columns(&dir.join(PHI_V), p.n_vertices, m, 1)?.remove(0);
    let phi_c = read_columns(&dir.join(PHI_C), p.n_faces, m, 1)?.remove(0);
    let mut g = read_columns(&dir.join(GRAD_C), p.n_faces, m, 3)?;
    let gz = g.pop().unwrap();
    let gy = g.pop().unwrap();
    let gx = g.pop().unwrap();
    Ok(EigenBasis { lambdas: man.lambdas, phi_v, phi_c, grad_c: GradientField { gx, gy, gz }, provenance: man.provenance })
}

/// True when `dir` holds a complete cache built from the same inputs.
pub fn cache_matches(dir: impl AsRef<Path>, mesh_hash: &str, num_basis: usize, layers: usize) -> bool {
    let dir = dir.as_ref();
    match read_manifest(dir) {
        Ok(m) => {
            m.provenance.mesh_hash == mesh_hash
                && m.provenance.num_basis == num_basis
                && m.provenance.layers == layers
                && basis_files().iter().all(|f| dir.join(f).is_file())
        }
        Err(_) => false,
    }
}
