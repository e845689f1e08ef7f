//! Smallest eigenpairs of the pencil (L, A) with A diagonal.
//!
//! Works on the symmetric operator C = A^{1/2} (L + sA)^{-1} A^{1/2}, whose
//! largest eigenvalues 1/(λ + s) belong to the smallest λ. A block Krylov
//! basis with full reorthogonalization is grown and thick-restarted around
//! the wanted Ritz vectors until their residuals are small.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::Solve;
use faer::{Accum, Mat, MatRef, Par, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::laplacian::LaplacianSystem;
use super::{SpectralError, SpectralResult};

#[derive(Debug, Clone)]
pub struct EigenConfig {
    pub block: usize,
    /// Ritz residual target relative to each Ritz value of C.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
    /// Problems up to this size are solved densely.
    pub dense_limit: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig { block: 8, tol: 1e-11, max_restarts: 200, seed: 0x5eed, dense_limit: 1500 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// n × M, columns mass-orthonormal.
    pub vectors: Mat<f64>,
    /// ‖Lφ − λAφ‖ / ‖Aφ‖ per pair.
    pub residuals: Vec<f64>,
}

pub fn smallest_eigenpairs(sys: &LaplacianSystem, m: usize, cfg: &EigenConfig) -> SpectralResult<EigenPairs> {
    let n = sys.n;
    if m == 0 || m > n {
        return Err(SpectralError::BadBasisSize { requested: m, available: n });
    }
    let (values, y) = if n <= cfg.dense_limit || m + 3 * cfg.block >= n {
        dense_pairs(sys, m)?
    } else {
        krylov_pairs(sys, m, cfg)?
    };
    finish(sys, values, y)
}

/// Dense reference path through A^{-1/2} L A^{-1/2}.
fn dense_pairs(sys: &LaplacianSystem, m: usize) -> SpectralResult<(Vec<f64>, Mat<f64>)> {
    let n = sys.n;
    let inv_s: Vec<f64> = sys.mass.iter().map(|a| 1.0 / a.sqrt()).collect();
    let mut a = Mat::<f64>::zeros(n, n);
    for c in 0..n {
        for p in sys.col_ptr[c]..sys.col_ptr[c + 1] {
            let r = sys.row_idx[p];
            a[(r, c)] = sys.values[p] * inv_s[r] * inv_s[c];
        }
    }
    let eig = a.self_adjoint_eigen(Side::Lower).map_err(|e| SpectralError::NoConvergence(format!("dense eigensolver: {e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let values: Vec<f64> = (0..m).map(|i| s[i]).collect();
    let y = Mat::from_fn(n, m, |i, j| u[(i, j)]);
    Ok((values, y))
}

struct ShiftInvert {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    sqrt_mass: Vec<f64>,
}

impl ShiftInvert {
    fn apply(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        let (n, b) = (x.nrows(), x.ncols());
        let mut w = Mat::from_fn(n, b, |i, j| x[(i, j)] * self.sqrt_mass[i]);
        self.llt.solve_in_place(w.as_mut());
        for j in 0..b {
            for (i, v) in w.col_as_slice_mut(j).iter_mut().enumerate() {
                *v *= self.sqrt_mass[i];
            }
        }
        w
    }
}

fn krylov_pairs(sys: &LaplacianSystem, m: usize, cfg: &EigenConfig) -> SpectralResult<(Vec<f64>, Mat<f64>)> {
    let n = sys.n;
    let b = cfg.block.max(1);
    let shift = 1.0 / sys.total_area();
    let k_mat = sys.shifted_lower(shift)?;
    let llt = k_mat
        .sp_cholesky(Side::Lower)
        .map_err(|e| SpectralError::Factorization(format!("{e:?}")))?;
    let op = ShiftInvert { llt, sqrt_mass: sys.mass.iter().map(|a| a.sqrt()).collect() };

    let round = |x: usize| x.div_ceil(b) * b;
    let m_max = round((m + m.max(8 * b)).min(n - 2 * b));
    let keep = round(m + (m_max - m) / 2).min(m_max - b);
    let cols = m_max + b;
    let mut q = Mat::<f64>::zeros(n, cols);
    let mut h = Mat::<f64>::zeros(cols, cols);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // start block
    let mut start = Mat::from_fn(n, b, |_, _| StandardNormal.sample(&mut rng));
    orthonormalize_block(q.as_ref().subcols(0, 0), &mut start, &mut rng);
    q.as_mut().subcols_mut(0, b).copy_from(&start);

    let mut j = 0usize;
    let mut restarts = 0usize;
    let mut last_report;
    loop {
        // expand the block at columns j..j+b
        let x = q.as_ref().subcols(j, b);
        let mut w = op.apply(x);
        let basis = q.as_ref().subcols(0, j + b);
        let mut coef = Mat::<f64>::zeros(j + b, b);
        for _ in 0..2 {
            let c = basis.transpose() * &w;
            matmul(w.as_mut(), Accum::Add, basis, &c, -1.0, Par::Seq);
            coef += &c;
        }
        let r = orthonormalize_block(basis, &mut w, &mut rng);
        h.as_mut().submatrix_mut(0, j, j + b, b).copy_from(&coef);
        h.as_mut().submatrix_mut(j + b, j, b, b).copy_from(&r);
        q.as_mut().subcols_mut(j + b, b).copy_from(&w);
        j += b;

        let check = j >= m_max || (j >= m + b && (j - m) % (4 * b) == 0);
        if !check {
            continue;
        }
        let t = Mat::from_fn(j, j, |r, c| 0.5 * (h[(r, c)] + h[(c, r)]));
        let eig = t
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| SpectralError::NoConvergence(format!("projected eigensolver: {e:?}")))?;
        let theta = eig.S().column_vector();
        let s = eig.U();
        // descending order of Ritz values
        let order: Vec<usize> = (0..j).rev().collect();
        let coupling = h.as_ref().submatrix(j, 0, b, j);
        let mut worst: f64 = 0.0;
        let mut worst_i = 0;
        for (rank, &i) in order.iter().take(m).enumerate() {
            let rv = coupling * s.col(i);
            let res = rv.norm_l2() / theta[i].abs().max(f64::MIN_POSITIVE);
            if res > worst {
                worst = res;
                worst_i = rank;
            }
        }
        last_report = format!("worst relative Ritz residual {worst:.3e} at pair {worst_i} after {restarts} restarts (basis {j})");
        if worst <= cfg.tol {
            let sel = Mat::from_fn(j, m, |r, c| s[(r, order[c])]);
            let y = q.as_ref().subcols(0, j) * &sel;
            let values = (0..m).map(|c| 1.0 / theta[order[c]] - shift).collect();
            return Ok((values, y));
        }
        if j < m_max {
            continue;
        }
        restarts += 1;
        if restarts > cfg.max_restarts {
            return Err(SpectralError::NoConvergence(last_report));
        }
        // thick restart on the `keep` leading Ritz vectors
        let sel = Mat::from_fn(j, keep, |r, c| s[(r, order[c])]);
        let ritz = q.as_ref().subcols(0, j) * &sel;
        let tail = coupling * &sel;
        let resid_block = q.as_ref().subcols(j, b).to_owned();
        q.as_mut().subcols_mut(0, keep).copy_from(&ritz);
        q.as_mut().subcols_mut(keep, b).copy_from(&resid_block);
        h.fill(0.0);
        for c in 0..keep {
            h[(c, c)] = theta[order[c]];
        }
        h.as_mut().submatrix_mut(keep, 0, b, keep).copy_from(&tail);
        h.as_mut().submatrix_mut(0, keep, keep, b).copy_from(tail.transpose());
        j = keep;
    }
}

/// Orthonormalize `w` against itself (the caller already projected out
/// `basis`) with two-pass Gram–Schmidt. Columns that vanish are replaced by
/// fresh random directions. Returns the triangular factor.
fn orthonormalize_block(basis: MatRef<'_, f64>, w: &mut Mat<f64>, rng: &mut ChaCha8Rng) -> Mat<f64> {
    let (n, b) = (w.nrows(), w.ncols());
    let mut r = Mat::<f64>::zeros(b, b);
    for c in 0..b {
        let before = norm(w.col_as_slice(c));
        for _ in 0..2 {
            for p in 0..c {
                let d = dot(w.col_as_slice(p), w.col_as_slice(c));
                r[(p, c)] += d;
                axpy(w, c, p, -d);
            }
        }
        let mut nrm = norm(w.col_as_slice(c));
        if nrm <= 1e-10 * before.max(f64::MIN_POSITIVE) || nrm == 0.0 {
            // breakdown: the block hit an invariant subspace
            for p in 0..c {
                r[(p, c)] = 0.0;
            }
            for i in 0..n {
                w[(i, c)] = StandardNormal.sample(rng);
            }
            for _ in 0..2 {
                if basis.ncols() > 0 {
                    let col = w.as_ref().subcols(c, 1);
                    let proj = basis.transpose() * col;
                    let mut dst = w.as_mut().subcols_mut(c, 1);
                    matmul(dst.as_mut(), Accum::Add, basis, &proj, -1.0, Par::Seq);
                }
                for p in 0..c {
                    let d = dot(w.col_as_slice(p), w.col_as_slice(c));
                    axpy(w, c, p, -d);
                }
            }
            nrm = norm(w.col_as_slice(c));
            r[(c, c)] = 0.0;
        } else {
            r[(c, c)] = nrm;
        }
        for v in w.col_as_slice_mut(c) {
            *v /= nrm;
        }
    }
    r
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(w: &mut Mat<f64>, dst: usize, src: usize, alpha: f64) {
    for i in 0..w.nrows() {
        let v = w[(i, src)];
        w[(i, dst)] += alpha * v;
    }
}

/// Map back to the generalized problem, refine values by Rayleigh quotients,
/// sort, fix signs and measure residuals.
fn finish(sys: &LaplacianSystem, _approx: Vec<f64>, y: Mat<f64>) -> SpectralResult<EigenPairs> {
    let (n, m) = (y.nrows(), y.ncols());
    let mut phi = Mat::from_fn(n, m, |i, j| y[(i, j)] / sys.mass[i].sqrt());
    let mut lphi = vec![0.0; n];
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(m);
    for k in 0..m {
        let col = phi.col_as_slice(k);
        sys.apply(col, &mut lphi);
        let num = dot(col, &lphi);
        let den: f64 = col.iter().zip(&sys.mass).map(|(x, a)| x * x * a).sum();
        let lam = num / den;
        pairs.push((if lam < 0.0 && lam > -1e-10 { 0.0 } else { lam }, k));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = Mat::<f64>::zeros(n, m);
    let mut values = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    for (dst, &(lam, src)) in pairs.iter().enumerate() {
        let col = phi.col_as_slice_mut(src);
        let den: f64 = col.iter().zip(&sys.mass).map(|(x, a)| x * x * a).sum();
        let scale = 1.0 / den.sqrt();
        let amax = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let first = col.iter().find(|v| v.abs() > 1e-8 * amax).copied().unwrap_or(0.0);
        let sign = if first < 0.0 { -scale } else { scale };
        for v in col.iter_mut() {
            *v *= sign;
        }
        sys.apply(col, &mut lphi);
        let mut rn = 0.0;
        let mut an = 0.0;
        for i in 0..n {
            let ax = sys.mass[i] * col[i];
            rn += (lphi[i] - lam * ax).powi(2);
            an += ax * ax;
        }
        residuals.push((rn / an).sqrt());
        values.push(lam);
        out.col_as_slice_mut(dst).copy_from_slice(col);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::NoConvergence("non-finite eigenvalue".into()));
    }
    Ok(EigenPairs { values, vectors: out, residuals })
}
