//! Pipeline orchestration shared by the CLI and the acceptance suite.

pub mod cli;
mod manifest;
mod model_file;
mod study;

pub use manifest::{hash_path, manifest_path, RunManifest};
pub use model_file::{ModelFile, MODEL_FORMAT};
pub use study::{evaluate_design, run_table2, score_model, table2_csv, DesignScore, RepeatRecord, StudyConfig, Table2Row};
