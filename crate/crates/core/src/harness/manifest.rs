use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Provenance record written last, next to a subcommand's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    /// Input path → SHA-256 (directories hash their sorted file list).
    pub inputs: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub threads: usize,
    pub wall_clock_s: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, argv: Vec<String>) -> Self {
        RunManifest {
            tool: "gpmi".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            argv,
            inputs: BTreeMap::new(),
            seeds: BTreeMap::new(),
            threads: rayon::current_num_threads(),
            wall_clock_s: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let p = path.as_ref();
        self.inputs.insert(p.display().to_string(), hash_path(p)?);
        Ok(())
    }

    /// Check every listed output exists, then write via a temporary file and
    /// rename.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        for o in &self.outputs {
            if !Path::new(o).exists() {
                return Err(Error::InvalidArgument(format!("manifest lists missing output {o}")));
            }
        }
        let path = path.as_ref();
        let tmp = path.with_extension("json.tmp");
        crate::export::write_json(&tmp, self)?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }
}

/// `out.csv` → `out.run.json`; a directory gets `run.json` inside.
pub fn manifest_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join("run.json")
    } else {
        out.with_extension("run.json")
    }
}

pub fn hash_path(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    if path.is_dir() {
        let mut names: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n != "run.json"))
            .collect();
        names.sort();
        for p in names {
            h.update(p.file_name().unwrap().to_string_lossy().as_bytes());
            h.update(std::fs::read(&p).map_err(|e| Error::io(&p, e))?);
        }
    } else {
        h.update(std::fs::read(path).map_err(|e| Error::io(path, e))?);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}
