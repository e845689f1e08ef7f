use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::gp::{FitDiagnostics, GpModel, Hyperparams, ObservationSet, SolveOptions, Standardization};
use crate::spectral::{cache, EigenBasis};
use crate::{Error, Result};

pub const MODEL_FORMAT: &str = "gpmi-model-v1";

/// Everything needed to rebuild a conditioned model from its basis cache.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    /// Basis directory, relative paths resolved against the model file.
    pub basis: String,
    pub mesh_hash: String,
    pub num_basis: usize,
    pub hyperparams: Hyperparams,
    pub standardization: Standardization,
    pub options: SolveOptions,
    pub log_likelihood: Option<f64>,
    pub diagnostics: Option<FitDiagnostics>,
    pub observations: ObservationSet,
}

impl ModelFile {
    pub fn from_model(model: &GpModel<'_>, basis_dir: &str, diagnostics: Option<FitDiagnostics>) -> Self {
        let b = model.basis();
        ModelFile {
            format: MODEL_FORMAT.into(),
            basis: basis_dir.into(),
            mesh_hash: b.provenance.mesh_hash.clone(),
            num_basis: b.m(),
            hyperparams: *model.hyperparams(),
            standardization: model.standardization(),
            options: model.options(),
            log_likelihood: model.log_likelihood(),
            diagnostics,
            observations: model.observations().clone(),
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let m: ModelFile = crate::export::read_json(path)?;
        if m.format != MODEL_FORMAT {
            return Err(Error::Schema { path: path.display().to_string(), msg: format!("unknown format {}", m.format) });
        }
        Ok(m)
    }

    pub fn basis_dir(&self, model_path: &Path) -> PathBuf {
        let b = Path::new(&self.basis);
        if b.is_absolute() {
            b.to_path_buf()
        } else {
            model_path.parent().unwrap_or(Path::new("")).join(b)
        }
    }

    /// Load the basis and refuse it when it was built from another mesh or
    /// with another size.
    pub fn load_basis(&self, model_path: &Path) -> Result<EigenBasis> {
        let dir = self.basis_dir(model_path);
        let basis = cache::load_basis(&dir)?;
        if basis.provenance.mesh_hash != self.mesh_hash || basis.m() != self.num_basis {
            return Err(Error::StaleCache(format!(
                "basis in {} (mesh {}, M={}) does not match model (mesh {}, M={})",
                dir.display(),
                basis.provenance.mesh_hash,
                basis.m(),
                self.mesh_hash,
                self.num_basis
            )));
        }
        Ok(basis)
    }

    pub fn model<'b>(&self, basis: &'b EigenBasis) -> Result<GpModel<'b>> {
        Ok(GpModel::with_standardization(basis, &self.observations, self.hyperparams, self.standardization, self.options)?)
    }
}

/// `target` expressed relative to directory `base` (both made absolute).
pub(crate) fn relative_to(target: &Path, base: &Path) -> Result<String> {
    let t = std::fs::canonicalize(target).map_err(|e| Error::io(target, e))?;
    let b = std::fs::canonicalize(base).map_err(|e| Error::io(base, e))?;
    let tc: Vec<_> = t.components().collect();
    let bc: Vec<_> = b.components().collect();
    let common = tc.iter().zip(&bc).take_while(|(x, y)| x == y).count();
    let mut rel = PathBuf::new();
    for _ in common..bc.len() {
        rel.push("..");
    }
    for c in &tc[common..] {
        rel.push(c);
    }
    let s = rel.display().to_string();
    Ok(if s.is_empty() { ".".into() } else { s })
}
