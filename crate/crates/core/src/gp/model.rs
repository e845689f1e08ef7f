use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use nalgebra::Matrix3;

use super::density::{weight_variances, Hyperparams};
use super::observations::{ObservationSet, Standardization};
use super::solve::{condition, SolveOptions};
use super::GpError;
use crate::mesh::{SurfacePoint, Vec3};
use crate::spectral::EigenBasis;

/// A reduced-rank GP conditioned on observations, held in weight space.
#[derive(Debug, Clone)]
pub struct GpModel<'b> {
    basis: &'b EigenBasis,
    obs: ObservationSet,
    hp: Hyperparams,
    standardization: Standardization,
    options: SolveOptions,
    weight_mean: Vec<f64>,
    weight_cov: Mat<f64>,
    log_lik: Option<f64>,
}

/// Posterior mean (ms) and variance (ms²) at a list of points.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorField {
    pub points: Vec<SurfacePoint>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Posterior of ∇LAT at face centroids (ms/mm).
#[derive(Debug, Clone)]
pub struct GradientPosterior {
    pub faces: Vec<usize>,
    pub mean: Vec<Vec3>,
    pub cov: Vec<Matrix3<f64>>,
}

impl<'b> GpModel<'b> {
    /// Condition on `obs` (merged first) with standardization from the data.
    pub fn new(basis: &'b EigenBasis, obs: &ObservationSet, hp: Hyperparams, options: SolveOptions) -> Result<Self, GpError> {
        let obs = obs.merged();
        let st = Standardization::from_data(&obs.y);
        Self::with_standardization(basis, &obs, hp, st, options)
    }

    /// Condition with supplied standardization constants. An empty set gives
    /// the prior.
    pub fn with_standardization(
        basis: &'b EigenBasis,
        obs: &ObservationSet,
        hp: Hyperparams,
        standardization: Standardization,
        options: SolveOptions,
    ) -> Result<Self, GpError> {
        if !hp.is_valid() {
            return Err(GpError::BadHyperparams(format!("{hp:?}")));
        }
        let obs = obs.merged();
        let d = weight_variances(&basis.lambdas, &hp);
        let m = basis.m();
        if obs.is_empty() {
            let mut cov = Mat::<f64>::zeros(m, m);
            for k in 0..m {
                cov[(k, k)] = d[k];
            }
            return Ok(GpModel {
                basis,
                obs,
                hp,
                standardization,
                options,
                weight_mean: vec![0.0; m],
                weight_cov: cov,
                log_lik: None,
            });
        }
        let pts: Vec<SurfacePoint> = obs.vertices.iter().map(|&v| SurfacePoint::Vertex(v)).collect();
        let phi = basis.rows(&pts).ok_or_else(|| GpError::UnknownTarget(format!("{:?}", first_missing(basis, &pts))))?;
        let y: Vec<f64> = obs.y.iter().map(|&v| standardization.forward(v)).collect();
        let noise: Vec<f64> = obs.sigma.iter().map(|&s| (s / standardization.sd).powi(2) + hp.eta).collect();
        let c = condition(phi.as_ref(), &y, &noise, &d, &options, true)?;
        Ok(GpModel {
            basis,
            obs,
            hp,
            standardization,
            options,
            weight_mean: c.weight_mean,
            weight_cov: c.weight_cov.expect("covariance requested"),
            log_lik: Some(c.log_lik),
        })
    }

    pub fn basis(&self) -> &'b EigenBasis {
        self.basis
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn observations(&self) -> &ObservationSet {
        &self.obs
    }

    pub fn standardization(&self) -> Standardization {
        self.standardization
    }

    pub fn options(&self) -> SolveOptions {
        self.options
    }

    /// Log marginal likelihood of the standardized data (None without data).
    pub fn log_likelihood(&self) -> Option<f64> {
        self.log_lik
    }

    pub fn weight_mean(&self) -> &[f64] {
        &self.weight_mean
    }

    pub fn weight_cov(&self) -> &Mat<f64> {
        &self.weight_cov
    }

    pub fn posterior_lat(&self, points: &[SurfacePoint]) -> Result<PosteriorField, GpError> {
        let phi = self
            .basis
            .rows(points)
            .ok_or_else(|| GpError::UnknownTarget(format!("{:?}", first_missing(self.basis, points))))?;
        let (n, m) = (phi.nrows(), phi.ncols());
        let mut t = Mat::<f64>::zeros(n, m);
        matmul(t.as_mut(), Accum::Replace, phi.as_ref(), self.weight_cov.as_ref(), 1.0, Par::Seq);
        let prior_w = weight_variances(&self.basis.lambdas, &self.hp);
        let (mu, sd) = (self.standardization.mean, self.standardization.sd);
        let mut mean = Vec::with_capacity(n);
        let mut var = Vec::with_capacity(n);
        for i in 0..n {
            let mut mi = 0.0;
            let mut vi = 0.0;
            let mut prior = 0.0;
            for k in 0..m {
                mi += phi[(i, k)] * self.weight_mean[k];
                vi += t[(i, k)] * phi[(i, k)];
                prior += prior_w[k] * phi[(i, k)] * phi[(i, k)];
            }
            mean.push(mu + sd * mi);
            var.push(clamp_variance(vi * sd * sd, prior * sd * sd, points[i])?);
        }
        Ok(PosteriorField { points: points.to_vec(), mean, var })
    }

    /// Every vertex followed by every face centroid.
    pub fn posterior_all(&self) -> Result<PosteriorField, GpError> {
        self.posterior_lat(&all_points(self.basis))
    }

    pub fn posterior_gradient(&self, faces: &[usize]) -> Result<GradientPosterior, GpError> {
        if !self.hp.nu.differentiable() {
            return Err(GpError::NotDifferentiable);
        }
        let nf = self.basis.n_faces();
        if let Some(&f) = faces.iter().find(|&&f| f >= nf) {
            return Err(GpError::UnknownTarget(format!("Centroid({f})")));
        }
        let m = self.basis.m();
        let g = &self.basis.grad_c;
        let comps = [&g.gx, &g.gy, &g.gz];
        let sel: Vec<Mat<f64>> = comps.iter().map(|c| Mat::from_fn(faces.len(), m, |i, k| c[(faces[i], k)])).collect();
        let t: Vec<Mat<f64>> = sel
            .iter()
            .map(|s| {
                let mut t = Mat::<f64>::zeros(faces.len(), m);
                matmul(t.as_mut(), Accum::Replace, s.as_ref(), self.weight_cov.as_ref(), 1.0, Par::Seq);
                t
            })
            .collect();
        let sd = self.standardization.sd;
        let mut mean = Vec::with_capacity(faces.len());
        let mut cov = Vec::with_capacity(faces.len());
        for i in 0..faces.len() {
            let mut mv = Vec3::zeros();
            let mut cv = Matrix3::zeros();
            for a in 0..3 {
                mv[a] = sd * (0..m).map(|k| sel[a][(i, k)] * self.weight_mean[k]).sum::<f64>();
                for b in a..3 {
                    let v = sd * sd * (0..m).map(|k| t[a][(i, k)] * sel[b][(i, k)]).sum::<f64>();
                    cv[(a, b)] = v;
                    cv[(b, a)] = v;
                }
            }
            mean.push(mv);
            cov.push(cv);
        }
        Ok(GradientPosterior { faces: faces.to_vec(), mean, cov })
    }

    pub fn posterior_gradient_all(&self) -> Result<GradientPosterior, GpError> {
        self.posterior_gradient(&(0..self.basis.n_faces()).collect::<Vec<_>>())
    }
}

pub fn all_points(basis: &EigenBasis) -> Vec<SurfacePoint> {
    (0..basis.n_vertices())
        .map(SurfacePoint::Vertex)
        .chain((0..basis.n_faces()).map(SurfacePoint::Centroid))
        .collect()
}

fn first_missing(basis: &EigenBasis, pts: &[SurfacePoint]) -> Option<SurfacePoint> {
    pts.iter().copied().find(|p| !basis.contains(*p))
}

fn clamp_variance(v: f64, prior: f64, at: SurfacePoint) -> Result<f64, GpError> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -1e-9 * prior.max(1.0) {
        Ok(0.0)
    } else {
        Err(GpError::NegativeVariance(format!("{at:?}: {v:e}")))
    }
}
