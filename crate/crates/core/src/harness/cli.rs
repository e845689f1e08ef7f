//! Command-line front end. Every subcommand writes its outputs, then a
//! run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::manifest::{manifest_path, RunManifest};
use super::model_file::{relative_to, ModelFile};
use super::study::{run_table2, table2_csv, StudyConfig};
use crate::cv::sample_cv;
use crate::export;
use crate::gp::{fit_hyperparameters, FitConfig, GpModel, Hyperparams, Smoothness, SolveOptions};
use crate::mesh::{io as mesh_io, shapes, SurfacePoint, TriMesh, Vec3};
use crate::metrics::{gradmag_report, report, Quantity};
use crate::sim::{eikonal_lat, sample_observations, sample_speed_field, SampleMode, SpeedParams};
use crate::spectral::{build_basis, cache, BasisConfig, EigenBasis};
use crate::{Error, Result};

const MESH_COPY: &str = "mesh.off";

#[derive(Debug, Parser)]
#[command(name = "gpmi", version, about = "Reduced-rank GP interpolation of activation times on surface meshes")]
pub struct Cli {
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a procedural test mesh.
    Mesh(MeshArgs),
    /// Build (or reuse) the eigenfunction basis cache for a mesh.
    Eigs(EigsArgs),
    /// Fit hyperparameters to observations.
    Fit(FitArgs),
    /// Posterior LAT mean and SD at vertices and centroids.
    Predict(PredictArgs),
    /// Monte-Carlo conduction-velocity statistics per face.
    Cv(CvArgs),
    /// Eikonal ground truth on a mesh.
    Simulate(SimulateArgs),
    /// Draw a noisy observation design from a ground truth.
    SampleObs(SampleObsArgs),
    /// Score predictions against a ground truth.
    Validate(ValidateArgs),
    /// Averaged accuracy/coverage table over observation counts.
    StudyTable2(StudyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Shape {
    Disc,
    Grid,
    Sphere,
    Cap,
    Atrium,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    #[arg(long, value_enum)]
    pub shape: Shape,
    /// Radius (disc, sphere, cap, atrium) or side length (grid), mm.
    #[arg(long, default_value_t = 25.0)]
    pub size: f64,
    /// Rings (disc), vertices per side (grid) or subdivision level.
    #[arg(long, default_value_t = 4)]
    pub resolution: usize,
    /// Cap half-angle in radians.
    #[arg(long, default_value_t = 1.0)]
    pub half_angle: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EigsArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub num_basis: usize,
    #[arg(long, default_value_t = 15)]
    pub extend_layers: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Rebuild even when a matching cache exists.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub basis: PathBuf,
    #[arg(long)]
    pub obs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    #[arg(long, default_value_t = 400)]
    pub max_evals: usize,
    #[arg(long, default_value = "3/2")]
    pub nu: Smoothness,
    /// Fixed length-scale (mm); with --tau2 and --eta skips the fit.
    #[arg(long, requires_all = ["tau2", "eta"])]
    pub l: Option<f64>,
    #[arg(long, requires_all = ["l", "eta"])]
    pub tau2: Option<f64>,
    #[arg(long, requires_all = ["l", "tau2"])]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub jitter: f64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub vtk: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub vtk: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub speed_seed: u64,
    /// Comma-separated source vertex ids.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sources: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Reuse a basis cache for the speed field instead of building one.
    #[arg(long)]
    pub basis: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    pub num_basis: usize,
    #[arg(long, default_value_t = 15)]
    pub extend_layers: usize,
    #[arg(long, default_value_t = 20.0)]
    pub speed_lengthscale: f64,
    #[arg(long, default_value_t = 0.3)]
    pub min_speed: f64,
    #[arg(long, default_value_t = 1.2)]
    pub max_speed: f64,
    #[arg(long, default_value_t = 1.5)]
    pub speed_gain: f64,
    #[arg(long)]
    pub vtk: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Random,
    Maximin,
}

#[derive(Debug, Args)]
pub struct SampleObsArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    #[arg(long, value_enum, default_value = "random")]
    pub mode: ModeArg,
    /// Random designs scored in maximin mode.
    #[arg(long, default_value_t = 10000)]
    pub designs: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum QuantityArg {
    Lat,
    Gradmag,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Element,
    Wave,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// `predict` CSV for lat, `cv` CSV for gradmag.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_enum)]
    pub quantity: QuantityArg,
    /// Ground-truth gradient estimator for gradmag.
    #[arg(long, value_enum, default_value = "element")]
    pub method: MethodArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write per-point ISE values as CSV.
    #[arg(long)]
    pub ise: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "50,100,250,500,750,1000")]
    pub counts: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub sources: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub speed_seed: u64,
    #[arg(long, default_value_t = 256)]
    pub num_basis: usize,
    #[arg(long, default_value_t = 15)]
    pub extend_layers: usize,
    #[arg(long)]
    pub basis: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    pub cv_samples: usize,
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    #[arg(long, default_value_t = 400)]
    pub max_evals: usize,
    #[arg(long, default_value_t = 20.0)]
    pub speed_lengthscale: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn argv() -> Vec<String> {
    std::env::args().collect()
}

fn finish(mut man: RunManifest, started: Instant, at: PathBuf) -> Result<()> {
    man.wall_clock_s = started.elapsed().as_secs_f64();
    man.write(at)
}

fn load_or_build_basis(mesh: &TriMesh, dir: Option<&Path>, num_basis: usize, layers: usize) -> Result<EigenBasis> {
    match dir {
        Some(d) => {
            let b = cache::load_basis(d)?;
            if b.provenance.mesh_hash != mesh.content_hash() {
                return Err(Error::StaleCache(format!("basis in {} was built from another mesh", d.display())));
            }
            Ok(b)
        }
        None => Ok(build_basis(mesh, &BasisConfig { num_basis, layers, ..Default::default() })?),
    }
}

/// Mesh stored next to a basis cache or truth directory.
fn companion_mesh(dir: &Path) -> Result<TriMesh> {
    mesh_io::load_mesh(dir.join(MESH_COPY), None)
}

pub fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    match cli.command {
        Command::Mesh(a) => {
            let mesh = match a.shape {
                Shape::Disc => shapes::disc(a.size, a.resolution.max(1)),
                Shape::Grid => shapes::square_grid(a.resolution.max(2), a.size),
                Shape::Sphere => shapes::icosphere(a.size, a.resolution),
                Shape::Cap => shapes::spherical_cap(a.size, a.half_angle, a.resolution),
                Shape::Atrium => shapes::atrium(a.size, a.resolution),
            };
            mesh_io::save_mesh(&mesh, &a.out, None)?;
            let mut man = RunManifest::new("mesh", argv());
            man.outputs.push(a.out.display().to_string());
            finish(man, started, manifest_path(&a.out, false))
        }
        Command::Eigs(a) => {
            let mesh = mesh_io::load_mesh(&a.mesh, None)?;
            let mut man = RunManifest::new("eigs", argv());
            man.input(&a.mesh)?;
            let hash = mesh.content_hash();
            if a.force || !cache::cache_matches(&a.out, &hash, a.num_basis, a.extend_layers) {
                let basis = build_basis(&mesh, &BasisConfig { num_basis: a.num_basis, layers: a.extend_layers, ..Default::default() })?;
                cache::save_basis(&a.out, &basis)?;
                mesh_io::save_mesh(&mesh, a.out.join(MESH_COPY), None)?;
            }
            man.outputs = cache::basis_files().iter().map(|f| a.out.join(f).display().to_string()).collect();
            man.outputs.push(a.out.join(MESH_COPY).display().to_string());
            finish(man, started, manifest_path(&a.out, true))
        }
        Command::Fit(a) => {
            let basis = cache::load_basis(&a.basis)?;
            let obs = export::read_obs_csv(&a.obs)?;
            let options = SolveOptions { jitter: a.jitter, ..Default::default() };
            let (model, diag) = match (a.l, a.tau2, a.eta) {
                (Some(l), Some(tau2), Some(eta)) => {
                    (GpModel::new(&basis, &obs, Hyperparams { nu: a.nu, l, tau2, eta }, options)?, None)
                }
                _ => {
                    let cfg = FitConfig { nu: a.nu, starts: a.starts, seed: a.seed, max_evals: a.max_evals, bounds: None, options };
                    let (m, d) = fit_hyperparameters(&basis, &obs, &cfg)?;
                    (m, Some(d))
                }
            };
            let out_dir = a.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
            let rel = relative_to(&a.basis, out_dir)?;
            export::write_json(&a.out, &ModelFile::from_model(&model, &rel, diag))?;
            let mut man = RunManifest::new("fit", argv());
            man.input(&a.basis)?;
            man.input(&a.obs)?;
            man.seeds.insert("seed".into(), a.seed);
            man.outputs.push(a.out.display().to_string());
            finish(man, started, manifest_path(&a.out, false))
        }
        Command::Predict(a) => {
            let mf = ModelFile::read(&a.model)?;
            let basis = mf.load_basis(&a.model)?;
            let model = mf.model(&basis)?;
            let field = model.posterior_all()?;
            export::write_posterior_csv(&a.out, &field)?;
            let mut man = RunManifest::new("predict", argv());
            man.input(&a.model)?;
            man.outputs.push(a.out.display().to_string());
            if let Some(vtk) = &a.vtk {
                let mesh = companion_mesh(&mf.basis_dir(&a.model))?;
                let nv = basis.n_vertices();
                let sd: Vec<f64> = field.var.iter().map(|v| v.sqrt()).collect();
                export::write_vtk(
                    vtk,
                    &mesh,
                    &[("lat_mean_ms", &field.mean[..nv]), ("lat_sd_ms", &sd[..nv])],
                    &[("lat_mean_ms", &field.mean[nv..]), ("lat_sd_ms", &sd[nv..])],
                    &[],
                )?;
                man.outputs.push(vtk.display().to_string());
            }
            finish(man, started, manifest_path(&a.out, false))
        }
        Command::Cv(a) => {
            let mf = ModelFile::read(&a.model)?;
            let basis = mf.load_basis(&a.model)?;
            let model = mf.model(&basis)?;
            let grad = model.posterior_gradient_all()?;
            let summary = sample_cv(&grad, a.samples, a.seed)?;
            export::write_cv_csv(&a.out, &summary)?;
            let mut man = RunManifest::new("cv", argv());
            man.input(&a.model)?;
            man.seeds.insert("seed".into(), a.seed);
            man.outputs.push(a.out.display().to_string());
            if let Some(vtk) = &a.vtk {
                let mesh = companion_mesh(&mf.basis_dir(&a.model))?;
                let dirs: Vec<Vec3> = summary.centroids.iter().map(|c| c.cv_mean_direction.unwrap_or_else(Vec3::zeros)).collect();
                let iqr: Vec<f64> = summary.centroids.iter().map(|c| c.cv_iqr).collect();
                let med: Vec<f64> = summary.centroids.iter().map(|c| c.cv_pct[2]).collect();
                export::write_vtk(vtk, &mesh, &[], &[("cv_iqr", &iqr), ("cv_median", &med)], &[("cv_mean", &dirs)])?;
                man.outputs.push(vtk.display().to_string());
            }
            finish(man, started, manifest_path(&a.out, false))
        }
        Command::Simulate(a) => {
            let mesh = mesh_io::load_mesh(&a.mesh, None)?;
            let mut man = RunManifest::new("simulate", argv());
            man.input(&a.mesh)?;
            if let Some(b) = &a.basis {
                man.input(b)?;
            }
            let basis = load_or_build_basis(&mesh, a.basis.as_deref(), a.num_basis, a.extend_layers)?;
            let params = SpeedParams {
                seed: a.speed_seed,
                lengthscale: a.speed_lengthscale,
                min_speed: a.min_speed,
                max_speed: a.max_speed,
                gain: a.speed_gain,
            };
            let speed = sample_speed_field(&basis, &params)?;
            let truth = eikonal_lat(&mesh, &speed, &a.sources)?;
            man.outputs = export::write_truth(&a.out, &truth)?;
            let mut s = String::from("vertex_id,speed_mm_per_ms\n");
            for (v, c) in speed.speed.iter().enumerate() {
                s.push_str(&format!("{v},{c}\n"));
            }
            let speed_path = a.out.join("speed.csv");
            std::fs::write(&speed_path, s).map_err(|e| Error::io(&speed_path, e))?;
            man.outputs.push(speed_path.display().to_string());
            let scenario = serde_json::json!({
                "mesh_hash": mesh.content_hash(),
                "sources": a.sources,
                "speed": params,
                "num_basis": basis.m(),
            });
            let sc = a.out.join("scenario.json");
            export::write_json(&sc, &scenario)?;
            man.outputs.push(sc.display().to_string());
            mesh_io::save_mesh(&mesh, a.out.join(MESH_COPY), None)?;
            man.outputs.push(a.out.join(MESH_COPY).display().to_string());
            if let Some(vtk) = &a.vtk {
                let g: Vec<Vec3> = truth.element.iter().map(|c| c.cv.unwrap_or_else(Vec3::zeros)).collect();
                export::write_vtk(vtk, &mesh, &[("lat_ms", &truth.lat), ("speed", &speed.speed)], &[], &[("cv_element", &g)])?;
                man.outputs.push(vtk.display().to_string());
            }
            man.seeds.insert("speed_seed".into(), a.speed_seed);
            finish(man, started, manifest_path(&a.out, true))
        }
        Command::SampleObs(a) => {
            let lat = export::read_truth_lat(&a.truth)?;
            let mesh = companion_mesh(&a.truth)?;
            if mesh.n_vertices() != lat.len() {
                return Err(Error::Schema { path: a.truth.display().to_string(), msg: "truth and mesh sizes differ".into() });
            }
            let truth = crate::sim::TruthField { lat, sources: vec![], element: vec![], wave: vec![] };
            let mode = match a.mode {
                ModeArg::Random => SampleMode::Random,
                ModeArg::Maximin => SampleMode::Maximin { designs: a.designs },
            };
            let obs = sample_observations(&mesh, &truth, a.n, a.noise_sd, mode, a.seed)?;
            export::write_obs_csv(&a.out, &obs)?;
            let mut man = RunManifest::new("sample-obs", argv());
            man.input(&a.truth)?;
            man.seeds.insert("seed".into(), a.seed);
            man.outputs.push(a.out.display().to_string());
            finish(man, started, manifest_path(&a.out, false))
        }
        Command::Validate(a) => {
            let rep = match a.quantity {
                QuantityArg::Lat => {
                    let truth = export::read_truth_lat(&a.truth)?;
                    let (pts, mean, sd) = export::read_posterior_csv(&a.pred)?;
                    let (mut p, mut v, mut t) = (vec![], vec![], vec![]);
                    for (i, pt) in pts.iter().enumerate() {
                        if let SurfacePoint::Vertex(id) = *pt {
                            let tv = *truth.get(id).ok_or_else(|| Error::Schema {
                                path: a.pred.display().to_string(),
                                msg: format!("vertex {id} not in truth"),
                            })?;
                            p.push(mean[i]);
                            v.push(sd[i] * sd[i]);
                            t.push(tv);
                        }
                    }
                    report(Quantity::Lat, &p, &v, &t, a.ise.is_some())?
                }
                QuantityArg::Gradmag => {
                    let (element, wave) = export::read_truth_gradients(&a.truth)?;
                    let truth = match a.method {
                        MethodArg::Element => element,
                        MethodArg::Wave => wave,
                    };
                    let (faces, mag, sd) = export::read_cv_csv(&a.pred)?;
                    let t = faces
                        .iter()
                        .map(|&f| truth.get(f).map(|c| c.gradient.norm()))
                        .collect::<Option<Vec<f64>>>()
                        .ok_or_else(|| Error::Schema { path: a.pred.display().to_string(), msg: "face not in truth".into() })?;
                    let mut r = gradmag_report(&mag, &sd, &t)?;
                    if a.ise.is_some() {
                        let var: Vec<f64> = sd.iter().map(|s| s * s).collect();
                        r.ise = Some(crate::metrics::ise(&mag, &var, &t)?.0);
                    }
                    r
                }
            };
            let mut man = RunManifest::new("validate", argv());
            man.input(&a.pred)?;
            man.input(&a.truth)?;
            if let (Some(path), Some(z)) = (&a.ise, &rep.ise) {
                let mut s = String::from("index,ise\n");
                for (i, v) in z.iter().enumerate() {
                    s.push_str(&format!("{i},{v}\n"));
                }
                std::fs::write(path, s).map_err(|e| Error::io(path, e))?;
                man.outputs.push(path.display().to_string());
            }
            let mut slim = rep;
            slim.ise = None;
            export::write_json(&a.out, &slim)?;
            man.outputs.push(a.out.display().to_string());
            finish(man, started, manifest_path(&a.out, false))
        }
        Command::StudyTable2(a) => {
            let mesh = mesh_io::load_mesh(&a.mesh, None)?;
            let mut man = RunManifest::new("study-table2", argv());
            man.input(&a.mesh)?;
            let basis = load_or_build_basis(&mesh, a.basis.as_deref(), a.num_basis, a.extend_layers)?;
            let params = SpeedParams { seed: a.speed_seed, lengthscale: a.speed_lengthscale, ..Default::default() };
            let speed = sample_speed_field(&basis, &params)?;
            let truth = eikonal_lat(&mesh, &speed, &a.sources)?;
            let cfg = StudyConfig {
                counts: a.counts.clone(),
                repeats: a.repeats,
                noise_sd: a.noise_sd,
                seed: a.seed,
                mode: SampleMode::Random,
                cv_samples: a.cv_samples,
                fit: FitConfig { starts: a.starts, max_evals: a.max_evals, ..Default::default() },
            };
            let (rows, records) = run_table2(&mesh, &basis, &truth, &cfg)?;
            if let Some(dir) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(&a.out, table2_csv(&rows)).map_err(|e| Error::io(&a.out, e))?;
            let detail = a.out.with_extension("detail.json");
            export::write_json(&detail, &records)?;
            man.outputs.push(a.out.display().to_string());
            man.outputs.push(detail.display().to_string());
            man.seeds.insert("seed".into(), a.seed);
            man.seeds.insert("speed_seed".into(), a.speed_seed);
            finish(man, started, manifest_path(&a.out, false))
        }
    }
}

/// Single-line, machine-parsable error report.
pub fn error_line(e: &Error) -> String {
    format!("error: kind={} msg={:?}", e.kind(), e.to_string())
}
