//! Weight-space conditioning: with f = Φw, w ~ N(0, D) and y ~ N(Φw, V),
//! the posterior over w is N(w̄, Cw). Two exact routes: the M×M core
//! Z = D⁻¹ + ΦᵀV⁻¹Φ, or the n×n system ΦDΦᵀ + V.

use std::f64::consts::PI;

use faer::linalg::matmul::matmul;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Accum, Mat, MatRef, Par, Side};
use serde::{Deserialize, Serialize};

use super::GpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolvePath {
    #[default]
    Auto,
    Dense,
    Woodbury,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Added to the diagonal of whichever matrix is factored.
    pub jitter: f64,
    pub path: SolvePath,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { jitter: 1e-8, path: SolvePath::Auto }
    }
}

pub(crate) struct Conditioned {
    pub log_lik: f64,
    pub weight_mean: Vec<f64>,
    pub weight_cov: Option<Mat<f64>>,
}

/// Pick the cheaper exact route; zero noise forces the n×n route.
pub(crate) fn choose_path(opts: &SolveOptions, n: usize, m: usize, groups: Option<usize>, noise: &[f64]) -> SolvePath {
    if noise.iter().any(|&v| !(v > 0.0)) {
        return SolvePath::Dense;
    }
    match opts.path {
        SolvePath::Auto => {
            let (n, m) = (n as f64, m as f64);
            let dense = n * n * m + n * n * n / 3.0;
            let wood = groups.map_or(n * m * m, |g| g as f64 * m * m) + m * m * m / 3.0;
            if dense < wood {
                SolvePath::Dense
            } else {
                SolvePath::Woodbury
            }
        }
        p => p,
    }
}

fn chol(mut a: Mat<f64>, what: &str) -> Result<Mat<f64>, GpError> {
    let n = a.nrows();
    // symmetrize before factoring: gemm round-off is not symmetric
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let llt = a.llt(Side::Lower).map_err(|_| GpError::NotPositiveDefinite(what.into()))?;
    Ok(llt.L().to_owned())
}

fn lower_solve(l: MatRef<'_, f64>, rhs: &mut Mat<f64>) {
    solve_lower_triangular_in_place(l, rhs.as_mut(), Par::Seq);
}

/// Route through the M×M core given the sufficient statistics
/// gram = ΦᵀV⁻¹Φ, b = ΦᵀV⁻¹y, yvy = yᵀV⁻¹y and log|V|.
pub(crate) fn woodbury(
    gram: &Mat<f64>,
    b: &[f64],
    yvy: f64,
    logdet_v: f64,
    n: usize,
    d: &[f64],
    jitter: f64,
    want_cov: bool,
) -> Result<Conditioned, GpError> {
    let m = d.len();
    let mut z = gram.clone();
    for k in 0..m {
        z[(k, k)] += 1.0 / d[k] + jitter;
    }
    let l = chol(z, "Woodbury core (increase jitter)")?;
    let mut u = Mat::from_fn(m, 1, |i, _| b[i]);
    lower_solve(l.as_ref(), &mut u);
    let quad: f64 = (0..m).map(|i| u[(i, 0)].powi(2)).sum();
    // w̄ = L⁻ᵀ u
    let mut w = u.clone();
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(l.transpose(), w.as_mut(), Par::Seq);
    let logdet_z: f64 = 2.0 * (0..m).map(|i| l[(i, i)].ln()).sum::<f64>();
    let logdet_d: f64 = d.iter().map(|x| x.ln()).sum();
    let log_lik = -0.5 * (yvy - quad) - 0.5 * (logdet_z + logdet_d + logdet_v) - 0.5 * n as f64 * (2.0 * PI).ln();
    if !log_lik.is_finite() {
        return Err(GpError::NonFinite("log marginal likelihood (increase jitter)".into()));
    }
    let weight_cov = if want_cov {
        let mut linv = Mat::<f64>::identity(m, m);
        lower_solve(l.as_ref(), &mut linv);
        let mut c = Mat::<f64>::zeros(m, m);
        matmul(c.as_mut(), Accum::Replace, linv.transpose(), linv.as_ref(), 1.0, Par::Seq);
        Some(c)
    } else {
        None
    };
    Ok(Conditioned { log_lik, weight_mean: (0..m).map(|i| w[(i, 0)]).collect(), weight_cov })
}

/// Route through the n×n marginal covariance.
pub(crate) fn dense(
    phi: MatRef<'_, f64>,
    y: &[f64],
    noise: &[f64],
    d: &[f64],
    jitter: f64,
    want_cov: bool,
) -> Result<Conditioned, GpError> {
    let (n, m) = (phi.nrows(), phi.ncols());
    let phid = Mat::from_fn(n, m, |i, k| phi[(i, k)] * d[k]);
    let mut kn = Mat::<f64>::zeros(n, n);
    matmul(kn.as_mut(), Accum::Replace, phid.as_ref(), phi.transpose(), 1.0, Par::Seq);
    for i in 0..n {
        kn[(i, i)] += noise[i] + jitter;
    }
    let l = chol(kn, "marginal covariance K + Sigma is singular (increase jitter)")?;
    let mut u = Mat::from_fn(n, 1, |i, _| y[i]);
    lower_solve(l.as_ref(), &mut u);
    let quad: f64 = (0..n).map(|i| u[(i, 0)].powi(2)).sum();
    let logdet: f64 = 2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();
    let log_lik = -0.5 * quad - 0.5 * logdet - 0.5 * n as f64 * (2.0 * PI).ln();
    if !log_lik.is_finite() {
        return Err(GpError::NonFinite("log marginal likelihood (increase jitter)".into()));
    }
    // α = L⁻ᵀ u, w̄ = D Φᵀ α
    let mut alpha = u;
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(l.transpose(), alpha.as_mut(), Par::Seq);
    let proj = phid.transpose() * &alpha;
    let weight_mean = (0..m).map(|k| proj[(k, 0)]).collect();
    let weight_cov = if want_cov {
        // Cw = D − Bᵀ B with B = L⁻¹ Φ D
        let mut bm = phid;
        lower_solve(l.as_ref(), &mut bm);
        let mut c = Mat::<f64>::zeros(m, m);
        matmul(c.as_mut(), Accum::Replace, bm.transpose(), bm.as_ref(), -1.0, Par::Seq);
        for k in 0..m {
            c[(k, k)] += d[k];
        }
        Some(c)
    } else {
        None
    };
    Ok(Conditioned { log_lik, weight_mean, weight_cov })
}

/// Sufficient statistics for the core route from raw rows.
pub(crate) fn core_stats(phi: MatRef<'_, f64>, y: &[f64], noise: &[f64]) -> (Mat<f64>, Vec<f64>, f64, f64) {
    let (n, m) = (phi.nrows(), phi.ncols());
    let scaled = Mat::from_fn(n, m, |i, k| phi[(i, k)] / noise[i]);
    let mut gram = Mat::<f64>::zeros(m, m);
    matmul(gram.as_mut(), Accum::Replace, scaled.transpose(), phi, 1.0, Par::Seq);
    let b = (0..m).map(|k| (0..n).map(|i| scaled[(i, k)] * y[i]).sum()).collect();
    let yvy = (0..n).map(|i| y[i] * y[i] / noise[i]).sum();
    let logdet_v = noise.iter().map(|v| v.ln()).sum();
    (gram, b, yvy, logdet_v)
}

pub(crate) fn condition(
    phi: MatRef<'_, f64>,
    y: &[f64],
    noise: &[f64],
    d: &[f64],
    opts: &SolveOptions,
    want_cov: bool,
) -> Result<Conditioned, GpError> {
    match choose_path(opts, phi.nrows(), phi.ncols(), None, noise) {
        SolvePath::Dense => dense(phi, y, noise, d, opts.jitter, want_cov),
        _ => {
            let (gram, b, yvy, ld) = core_stats(phi, y, noise);
            woodbury(&gram, &b, yvy, ld, phi.nrows(), d, opts.jitter, want_cov)
        }
    }
}
