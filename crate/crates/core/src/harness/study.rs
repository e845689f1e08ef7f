use serde::{Deserialize, Serialize};

use crate::cv::sample_cv;
use crate::gp::{fit_hyperparameters, FitConfig, GpModel, Hyperparams, ObservationSet};
use crate::metrics::{gradmag_report, lat_report, MetricsReport};
use crate::mesh::{SurfacePoint, TriMesh};
use crate::sim::{sample_observations, SampleMode, TruthField};
use crate::spectral::EigenBasis;
use crate::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    pub counts: Vec<usize>,
    pub repeats: usize,
    pub noise_sd: f64,
    pub seed: u64,
    pub mode: SampleMode,
    pub cv_samples: usize,
    pub fit: FitConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            counts: vec![50, 100, 250, 500, 750, 1000],
            repeats: 10,
            noise_sd: 1.0,
            seed: 0,
            mode: SampleMode::Random,
            cv_samples: 2000,
            fit: FitConfig::default(),
        }
    }
}

/// Scores of one fitted design against the truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignScore {
    pub lat: MetricsReport,
    pub wave: MetricsReport,
    pub element: MetricsReport,
    pub hyperparams: Hyperparams,
    pub log_likelihood: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub n: usize,
    pub repeat: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub score: DesignScore,
}

/// One averaged row of the study table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub n: usize,
    pub lat_nrmse: f64,
    pub lat_coverage: f64,
    pub wave_nrmse: f64,
    pub wave_coverage: f64,
    pub element_nrmse: f64,
    pub element_coverage: f64,
}

/// Score a fitted model: LAT at every vertex, |∇LAT| at every face against
/// both truth estimators. The gradient channel uses |posterior-mean
/// gradient| as prediction and the SD of sampled magnitudes as uncertainty.
pub fn score_model(model: &GpModel<'_>, truth: &TruthField, cv_samples: usize, cv_seed: u64) -> Result<DesignScore> {
    let basis = model.basis();
    let verts: Vec<SurfacePoint> = (0..basis.n_vertices()).map(SurfacePoint::Vertex).collect();
    let post = model.posterior_lat(&verts)?;
    let lat = lat_report(&post.mean, &post.var, &truth.lat)?;
    let grad = model.posterior_gradient_all()?;
    let cv = sample_cv(&grad, cv_samples, cv_seed)?;
    let mag: Vec<f64> = cv.centroids.iter().map(|c| c.grad_mean).collect();
    let sd: Vec<f64> = cv.centroids.iter().map(|c| c.grad_sd).collect();
    let wave_truth: Vec<f64> = truth.wave.iter().map(|c| c.gradient.norm()).collect();
    let element_truth: Vec<f64> = truth.element.iter().map(|c| c.gradient.norm()).collect();
    Ok(DesignScore {
        lat,
        wave: gradmag_report(&mag, &sd, &wave_truth)?,
        element: gradmag_report(&mag, &sd, &element_truth)?,
        hyperparams: *model.hyperparams(),
        log_likelihood: model.log_likelihood(),
    })
}

/// Fit on `obs` and score.
pub fn evaluate_design(basis: &EigenBasis, truth: &TruthField, obs: &ObservationSet, fit: &FitConfig, cv_samples: usize, cv_seed: u64) -> Result<DesignScore> {
    let (model, _) = fit_hyperparameters(basis, obs, fit)?;
    score_model(&model, truth, cv_samples, cv_seed)
}

fn design_seed(base: u64, n: usize, repeat: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((repeat as u64) << 32 | n as u64)
}

/// The averaged observation-count study: for each n, `repeats` random
/// designs are fitted and scored; rows hold the means.
pub fn run_table2(mesh: &TriMesh, basis: &EigenBasis, truth: &TruthField, cfg: &StudyConfig) -> Result<(Vec<Table2Row>, Vec<RepeatRecord>)> {
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &n in &cfg.counts {
        let mut acc = [0.0f64; 6];
        for r in 0..cfg.repeats {
            let seed = design_seed(cfg.seed, n, r);
            let obs = sample_observations(mesh, truth, n, cfg.noise_sd, cfg.mode, seed)?;
            let fit = FitConfig { seed, ..cfg.fit.clone() };
            let score = evaluate_design(basis, truth, &obs, &fit, cfg.cv_samples, seed)?;
            let v = [
                score.lat.nrmse_percent,
                score.lat.coverage_percent,
                score.wave.nrmse_percent,
                score.wave.coverage_percent,
                score.element.nrmse_percent,
                score.element.coverage_percent,
            ];
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x;
            }
            records.push(RepeatRecord { n, repeat: r, seed, score });
        }
        let k = cfg.repeats.max(1) as f64;
        rows.push(Table2Row {
            n,
            lat_nrmse: acc[0] / k,
            lat_coverage: acc[1] / k,
            wave_nrmse: acc[2] / k,
            wave_coverage: acc[3] / k,
            element_nrmse: acc[4] / k,
            element_coverage: acc[5] / k,
        });
    }
    Ok((rows, records))
}

pub fn table2_csv(rows: &[Table2Row]) -> String {
    let mut s = String::from("n,lat_nrmse,lat_coverage,wave_nrmse,wave_coverage,element_nrmse,element_coverage\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n, r.lat_nrmse, r.lat_coverage, r.wave_nrmse, r.wave_coverage, r.element_nrmse, r.element_coverage
        ));
    }
    s
}
