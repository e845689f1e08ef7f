//! Hyperparameter fitting by multi-start bounded Nelder–Mead on
//! (log l, log τ², log η).

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::density::{weight_variances, Hyperparams, Smoothness};
use super::model::GpModel;
use super::observations::{ObservationSet, Standardization};
use super::solve::{choose_path, core_stats, dense, woodbury, SolveOptions, SolvePath};
use super::GpError;
use crate::mesh::SurfacePoint;
use crate::spectral::EigenBasis;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub l: (f64, f64),
    pub tau2: (f64, f64),
    pub eta: (f64, f64),
}

impl Bounds {
    pub fn for_basis(basis: &EigenBasis) -> Self {
        let p = &basis.provenance;
        Bounds { l: (p.mean_edge_length, p.diameter), tau2: (0.1, 10.0), eta: (1e-6, 1.0) }
    }

    fn log_box(&self) -> ([f64; 3], [f64; 3]) {
        (
            [self.l.0.ln(), self.tau2.0.ln(), self.eta.0.ln()],
            [self.l.1.ln(), self.tau2.1.ln(), self.eta.1.ln()],
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub nu: Smoothness,
    pub starts: usize,
    pub seed: u64,
    pub max_evals: usize,
    pub bounds: Option<Bounds>,
    pub options: SolveOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            nu: Smoothness::ThreeHalves,
            starts: 8,
            seed: 0,
            max_evals: 400,
            bounds: None,
            options: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub start: [f64; 3],
    pub start_log_lik: f64,
    pub best: [f64; 3],
    pub best_log_lik: f64,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub starts: Vec<StartRecord>,
    pub best_start: usize,
    pub total_evals: usize,
    pub bounds: Bounds,
}

/// Reusable pieces of the likelihood for one data set.
pub struct LikelihoodWorkspace {
    phi: Mat<f64>,
    y: Vec<f64>,
    sigma2: Vec<f64>,
    lambdas: Vec<f64>,
    /// Per distinct σ²: (σ², ΦᵀΦ, Φᵀy, yᵀy, count).
    groups: Option<Vec<(f64, Mat<f64>, Vec<f64>, f64, usize)>>,
}

const MAX_GROUPS: usize = 8;

impl LikelihoodWorkspace {
    /// `obs` must already be merged; y and σ are standardized here.
    pub fn new(basis: &EigenBasis, obs: &ObservationSet, st: Standardization) -> Result<Self, GpError> {
        let pts: Vec<SurfacePoint> = obs.vertices.iter().map(|&v| SurfacePoint::Vertex(v)).collect();
        let phi = basis.rows(&pts).ok_or_else(|| GpError::UnknownTarget("observation vertex outside basis".into()))?;
        let y: Vec<f64> = obs.y.iter().map(|&v| st.forward(v)).collect();
        let sigma2: Vec<f64> = obs.sigma.iter().map(|&s| (s / st.sd).powi(2)).collect();
        let mut distinct: Vec<f64> = Vec::new();
        for &s in &sigma2 {
            if !distinct.contains(&s) {
                distinct.push(s);
            }
            if distinct.len() > MAX_GROUPS {
                break;
            }
        }
        let groups = (distinct.len() <= MAX_GROUPS).then(|| {
            distinct
                .iter()
                .map(|&s| {
                    let idx: Vec<usize> = (0..y.len()).filter(|&i| sigma2[i] == s).collect();
                    let sub = Mat::from_fn(idx.len(), phi.ncols(), |i, k| phi[(idx[i], k)]);
                    let mut g = Mat::<f64>::zeros(phi.ncols(), phi.ncols());
                    matmul(g.as_mut(), Accum::Replace, sub.transpose(), sub.as_ref(), 1.0, Par::Seq);
                    let b = (0..phi.ncols()).map(|k| idx.iter().enumerate().map(|(i, &r)| sub[(i, k)] * y[r]).sum()).collect();
                    let yy = idx.iter().map(|&r| y[r] * y[r]).sum();
                    (s, g, b, yy, idx.len())
                })
                .collect()
        });
        Ok(LikelihoodWorkspace { phi, y, sigma2, lambdas: basis.lambdas.clone(), groups })
    }

    pub fn log_likelihood(&self, hp: &Hyperparams, opts: &SolveOptions) -> Result<f64, GpError> {
        let d = weight_variances(&self.lambdas, hp);
        let noise: Vec<f64> = self.sigma2.iter().map(|s| s + hp.eta).collect();
        let n = self.y.len();
        let m = d.len();
        let path = choose_path(opts, n, m, self.groups.as_ref().map(|g| g.len()), &noise);
        let c = match (path, &self.groups) {
            (SolvePath::Dense, _) => dense(self.phi.as_ref(), &self.y, &noise, &d, opts.jitter, false)?,
            (_, Some(groups)) => {
                let mut gram = Mat::<f64>::zeros(m, m);
                let mut b = vec![0.0; m];
                let mut yvy = 0.0;
                let mut logdet = 0.0;
                for (s, g, bg, yy, cnt) in groups {
                    let v = s + hp.eta;
                    gram += g * (1.0 / v);
                    for k in 0..m {
                        b[k] += bg[k] / v;
                    }
                    yvy += yy / v;
                    logdet += *cnt as f64 * v.ln();
                }
                woodbury(&gram, &b, yvy, logdet, n, &d, opts.jitter, false)?
            }
            (_, None) => {
                let (gram, b, yvy, ld) = core_stats(self.phi.as_ref(), &self.y, &noise);
                woodbury(&gram, &b, yvy, ld, n, &d, opts.jitter, false)?
            }
        };
        Ok(c.log_lik)
    }
}

/// Maximize the log marginal likelihood; σ stays fixed, ν is not fitted.
pub fn fit_hyperparameters<'b>(
    basis: &'b EigenBasis,
    obs: &ObservationSet,
    cfg: &FitConfig,
) -> Result<(GpModel<'b>, FitDiagnostics), GpError> {
    let obs = obs.merged();
    if obs.len() < 2 {
        return Err(GpError::BadObservations(format!("need at least 2 observations, got {}", obs.len())));
    }
    let st = Standardization::from_data(&obs.y);
    let ws = LikelihoodWorkspace::new(basis, &obs, st)?;
    let bounds = cfg.bounds.unwrap_or_else(|| Bounds::for_basis(basis));
    let (lo, hi) = bounds.log_box();
    let to_hp = |x: &[f64; 3]| Hyperparams { nu: cfg.nu, l: x[0].exp(), tau2: x[1].exp(), eta: x[2].exp() };
    let objective = |x: &[f64; 3]| -> f64 {
        match ws.log_likelihood(&to_hp(x), &cfg.options) {
            Ok(v) if v.is_finite() => -v,
            _ => f64::INFINITY,
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts = latin_hypercube(cfg.starts.max(1), &lo, &hi, &mut rng);
    let mut records = Vec::with_capacity(starts.len());
    for x0 in starts {
        let f0 = objective(&x0);
        let r = nelder_mead(&objective, x0, &lo, &hi, cfg.max_evals);
        records.push(StartRecord {
            start: x0.map(f64::exp),
            start_log_lik: -f0,
            best: r.x.map(f64::exp),
            best_log_lik: -r.f,
            evals: r.evals,
            converged: r.converged && r.f.is_finite(),
        });
    }
    let total_evals = records.iter().map(|r| r.evals).sum();
    let mut best = 0;
    for (i, r) in records.iter().enumerate() {
        if r.best_log_lik > records[best].best_log_lik || !records[best].best_log_lik.is_finite() {
            best = i;
        }
    }
    let rec = &records[best];
    if !records.iter().any(|r| r.converged) {
        return Err(GpError::FitFailed { best: rec.best, log_lik: rec.best_log_lik });
    }
    let hp = Hyperparams { nu: cfg.nu, l: rec.best[0], tau2: rec.best[1], eta: rec.best[2] };
    let model = GpModel::with_standardization(basis, &obs, hp, st, cfg.options)?;
    Ok((model, FitDiagnostics { starts: records, best_start: best, total_evals, bounds }))
}

fn latin_hypercube(n: usize, lo: &[f64; 3], hi: &[f64; 3], rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let mut perms: Vec<Vec<usize>> = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        perms.push(p);
    }
    (0..n)
        .map(|i| {
            std::array::from_fn(|d| {
                let u: f64 = rng.random();
                lo[d] + (hi[d] - lo[d]) * (perms[d][i] as f64 + u) / n as f64
            })
        })
        .collect()
}

struct NmResult {
    x: [f64; 3],
    f: f64,
    evals: usize,
    converged: bool,
}

fn clamp(x: [f64; 3], lo: &[f64; 3], hi: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|d| x[d].clamp(lo[d], hi[d]))
}

fn nelder_mead(f: &impl Fn(&[f64; 3]) -> f64, x0: [f64; 3], lo: &[f64; 3], hi: &[f64; 3], max_evals: usize) -> NmResult {
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64; 3]| {
        evals.set(evals.get() + 1);
        f(x)
    };
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    let x0 = clamp(x0, lo, hi);
    simplex.push((x0, eval(&x0)));
    for d in 0..3 {
        let step = 0.1 * (hi[d] - lo[d]);
        let mut x = x0;
        x[d] = if x0[d] + step <= hi[d] { x0[d] + step } else { x0[d] - step };
        simplex.push((x, eval(&x)));
    }
    let comb = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] { std::array::from_fn(|d| a[d] + t * (b[d] - a[d])) };
    let mut converged = false;
    while evals.get() < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (fb, fw) = (simplex[0].1, simplex[3].1);
        let size = (1..4)
            .map(|i| (0..3).map(|d| (simplex[i].0[d] - simplex[0].0[d]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if fb.is_finite() && (fw - fb).abs() <= 1e-10 * (1.0 + fb.abs()) && size < 1e-6 {
            converged = true;
            break;
        }
        let centroid: [f64; 3] = std::array::from_fn(|d| (0..3).map(|i| simplex[i].0[d]).sum::<f64>() / 3.0);
        let worst = simplex[3].0;
        let xr = clamp(comb(&centroid, &worst, -1.0), lo, hi);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = clamp(comb(&centroid, &worst, -2.0), lo, hi);
            let fe = eval(&xe);
            simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (xr, fr);
        } else {
            let (xc, fc) = if fr < fw {
                let x = clamp(comb(&centroid, &xr, 0.5), lo, hi);
                (x, eval(&x))
            } else {
                let x = clamp(comb(&centroid, &worst, 0.5), lo, hi);
                (x, eval(&x))
            };
            if fc < fw.min(fr) {
                simplex[3] = (xc, fc);
            } else {
                let best = simplex[0].0;
                for i in 1..4 {
                    let x = comb(&best, &simplex[i].0, 0.5);
                    simplex[i] = (x, eval(&x));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    NmResult { x: simplex[0].0, f: simplex[0].1, evals: evals.get(), converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_finds_box_minimum() {
        let f = |x: &[f64; 3]| (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2) + (x[2] - 3.0).powi(2);
        let r = nelder_mead(&f, [0.0, 0.0, 0.0], &[-2.0; 3], &[2.0; 3], 2000);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] + 0.5).abs() < 1e-4 && (r.x[2] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn latin_hypercube_strata() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = latin_hypercube(8, &[0.0; 3], &[8.0; 3], &mut rng);
        for d in 0..3 {
            let mut cells: Vec<usize> = pts.iter().map(|p| p[d].floor() as usize).collect();
            cells.sort();
            assert_eq!(cells, (0..8).collect::<Vec<_>>());
        }
    }
}
