use nalgebra::{Matrix3, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CvError, UNDEFINED_GRADIENT};
use crate::gp::GradientPosterior;
use crate::mesh::Vec3;

pub const PERCENTILES: [f64; 5] = [9.0, 25.0, 50.0, 75.0, 91.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidCv {
    pub face: usize,
    /// |E[∇LAT]|, ms/mm.
    pub grad_mean: f64,
    /// SD of sampled |∇LAT|.
    pub grad_sd: f64,
    pub grad_pct: [f64; 5],
    /// cv_pct[i] = 1 / grad_pct[4 − i], mm/ms.
    pub cv_pct: [f64; 5],
    pub cv_iqr: f64,
    pub undefined: bool,
    /// Posterior-mean CV vector, None when undefined.
    pub cv_mean_direction: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub seed: u64,
    pub nsamples: usize,
    pub centroids: Vec<CentroidCv>,
}

/// Linear interpolation between order statistics of sorted data.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sample_cv(grad: &GradientPosterior, nsamples: usize, seed: u64) -> Result<CvSummary, CvError> {
    if nsamples < 2 {
        return Err(CvError::InvalidArgument(format!("need at least 2 samples, got {nsamples}")));
    }
    let centroids = (0..grad.faces.len())
        .into_par_iter()
        .map(|i| one_centroid(grad.faces[i], &grad.mean[i], &grad.cov[i], nsamples, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CvSummary { seed, nsamples, centroids })
}

fn one_centroid(face: usize, mean: &Vec3, cov: &Matrix3<f64>, nsamples: usize, seed: u64) -> Result<CentroidCv, CvError> {
    let sym = 0.5 * (cov + cov.transpose());
    let eig = SymmetricEigen::new(sym);
    let scale = sym.trace().abs().max(1e-300);
    let min = eig.eigenvalues.min();
    if min < -1e-9 * scale.max(1.0) {
        return Err(CvError::NotPsd { face, eigenvalue: min });
    }
    let mut factor = eig.eigenvectors;
    for k in 0..3 {
        let s = eig.eigenvalues[k].max(0.0).sqrt();
        for r in 0..3 {
            factor[(r, k)] *= s;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(face as u64);
    let mut mags: Vec<f64> = (0..nsamples)
        .map(|_| {
            let z = Vec3::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            (mean + factor * z).norm()
        })
        .collect();
    let n = nsamples as f64;
    let mu = mags.iter().sum::<f64>() / n;
    let sd = (mags.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    mags.sort_by(f64::total_cmp);
    let grad_pct = PERCENTILES.map(|p| percentile(&mags, p));
    let cv_pct: [f64; 5] = std::array::from_fn(|i| 1.0 / grad_pct[4 - i]);
    let grad_mean = mean.norm();
    Ok(CentroidCv {
        face,
        grad_mean,
        grad_sd: sd,
        grad_pct,
        cv_pct,
        cv_iqr: cv_pct[3] - cv_pct[1],
        undefined: grad_mean < UNDEFINED_GRADIENT,
        cv_mean_direction: super::cv_from_gradient(mean),
    })
}
