use std::f64::consts::PI;
use std::sync::OnceLock;

use faer::Mat;
use gpmi::gp::{
    explained_variance, fit_hyperparameters, matern, prior_covariance, spectral_density, weight_variances, FitConfig, GpError, GpModel,
    Hyperparams, LikelihoodWorkspace, ObservationSet, Smoothness, SolveOptions, SolvePath, Standardization,
};
use gpmi::mesh::{face_geometry, shapes, SurfacePoint, TriMesh};
use gpmi::spectral::{build_basis, BasisConfig, EigenBasis};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

struct Fixture {
    mesh: TriMesh,
    basis: EigenBasis,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let mesh = shapes::disc(20.0, 10);
        let basis = build_basis(&mesh, &BasisConfig { num_basis: 48, layers: 6, ..Default::default() }).unwrap();
        Fixture { mesh, basis }
    })
}

fn exact(path: SolvePath) -> SolveOptions {
    SolveOptions { jitter: 0.0, path }
}

fn random_obs(n: usize, seed: u64, hetero: bool) -> ObservationSet {
    let f = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<usize> = sample(&mut rng, f.mesh.n_vertices(), n).into_iter().collect();
    let y: Vec<f64> = v.iter().map(|&i| 0.3 * f.mesh.vertex(i).x + rng.random_range(-1.0..1.0)).collect();
    let s: Vec<f64> = (0..n).map(|_| if hetero { rng.random_range(0.2..1.5) } else { 0.7 }).collect();
    ObservationSet::new(v, y, s).unwrap()
}

#[test]
fn density_at_origin() {
    assert!((spectral_density(0.0, Smoothness::ThreeHalves, 1.0) - 2.0 * PI).abs() < 1e-12);
}

#[test]
fn density_matches_fft_of_kernel() {
    let l = 4.0;
    let n = 1024;
    let dx = l / 8.0;
    // kernel sampled on a periodic grid centred at the origin
    let mut data: Vec<Complex<f64>> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let x = if i < n / 2 { i as f64 } else { i as f64 - n as f64 } * dx;
            let y = if j < n / 2 { j as f64 } else { j as f64 - n as f64 } * dx;
            Complex::new(matern((x * x + y * y).sqrt(), Smoothness::ThreeHalves, l), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    // second pass along columns; only column 0 is needed (ω along one axis)
    let mut col: Vec<Complex<f64>> = (0..n).map(|i| data[i * n]).collect();
    fft.process(&mut col);
    let dw = 2.0 * PI / (n as f64 * dx);
    let mut k = 0;
    let mut worst: f64 = 0.0;
    while k as f64 * dw <= 3.0 / l {
        let w = k as f64 * dw;
        let num = col[k].re * dx * dx;
        let s = spectral_density(w, Smoothness::ThreeHalves, l);
        worst = worst.max((num - s).abs() / s);
        k += 1;
    }
    assert!(k > 10);
    assert!(worst < 0.01, "worst {worst}");
}

#[test]
fn single_mode_kernel_is_constant() {
    let f = fixture();
    let b = f.basis.truncated(1);
    let hp = Hyperparams::new(5.0, 2.0, 0.0);
    let pts: Vec<SurfacePoint> = (0..10).map(SurfacePoint::Vertex).chain((0..5).map(SurfacePoint::Centroid)).collect();
    let k = prior_covariance(&b, &hp, &pts, &pts).unwrap();
    let want = 2.0 * spectral_density(0.0, Smoothness::ThreeHalves, 5.0) / b.provenance.total_area;
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            assert!((k[(i, j)] - want).abs() < 1e-9 * want);
        }
    }
}

#[test]
fn n1_likelihood_formula() {
    let f = fixture();
    let hp = Hyperparams::new(6.0, 1.3, 0.05);
    let (v, y, s) = (17usize, 0.8, 0.4);
    let obs = ObservationSet::new(vec![v], vec![y], vec![s]).unwrap();
    let ws = LikelihoodWorkspace::new(&f.basis, &obs, Standardization::IDENTITY).unwrap();
    let k11 = prior_covariance(&f.basis, &hp, &[SurfacePoint::Vertex(v)], &[SurfacePoint::Vertex(v)]).unwrap()[(0, 0)];
    let var = k11 + s * s + hp.eta;
    let want = -0.5 * (y * y / var + (2.0 * PI * var).ln());
    for path in [SolvePath::Dense, SolvePath::Woodbury] {
        let got = ws.log_likelihood(&hp, &exact(path)).unwrap();
        assert!((got - want).abs() < 1e-10, "{path:?}: {got} vs {want}");
    }
}

#[test]
fn noiseless_interpolation() {
    let f = fixture();
    let obs = ObservationSet::new(vec![33], vec![42.0], vec![0.0]).unwrap();
    let st = Standardization { mean: 30.0, sd: 5.0 };
    let m = GpModel::with_standardization(&f.basis, &obs, Hyperparams::new(6.0, 1.0, 0.0), st, exact(SolvePath::Auto)).unwrap();
    let p = m.posterior_lat(&[SurfacePoint::Vertex(33)]).unwrap();
    assert!((p.mean[0] - 42.0).abs() < 1e-6);
}

#[test]
fn prior_query() {
    let f = fixture();
    let hp = Hyperparams::new(6.0, 1.7, 0.0);
    let st = Standardization { mean: 12.0, sd: 3.0 };
    let m = GpModel::with_standardization(&f.basis, &ObservationSet::default(), hp, st, SolveOptions::default()).unwrap();
    let pts = [SurfacePoint::Vertex(3), SurfacePoint::Centroid(9)];
    let p = m.posterior_lat(&pts).unwrap();
    let k = prior_covariance(&f.basis, &hp, &pts, &pts).unwrap();
    for i in 0..2 {
        assert_eq!(p.mean[i], 12.0);
        assert!((p.var[i] - 9.0 * k[(i, i)]).abs() < 1e-12 * p.var[i]);
    }
}

#[test]
fn constant_data_has_zero_gradient() {
    let f = fixture();
    let obs = ObservationSet::new((0..40).collect(), vec![7.0; 40], vec![0.5; 40]).unwrap();
    let m = GpModel::new(&f.basis, &obs, Hyperparams::new(6.0, 1.0, 0.01), SolveOptions::default()).unwrap();
    let g = m.posterior_gradient_all().unwrap();
    assert!(g.mean.iter().all(|v| v.norm() < 1e-6));
}

#[test]
fn half_smoothness_refuses_gradients() {
    let f = fixture();
    let hp = Hyperparams { nu: Smoothness::Half, l: 6.0, tau2: 1.0, eta: 0.01 };
    let m = GpModel::new(&f.basis, &random_obs(20, 1, false), hp, SolveOptions::default()).unwrap();
    assert!(matches!(m.posterior_gradient(&[0]), Err(GpError::NotDifferentiable)));
    assert!(m.posterior_lat(&[SurfacePoint::Vertex(0)]).is_ok());
}

#[test]
fn unknown_target_is_an_error() {
    let f = fixture();
    let m = GpModel::new(&f.basis, &random_obs(10, 2, false), Hyperparams::new(6.0, 1.0, 0.01), SolveOptions::default()).unwrap();
    assert!(matches!(m.posterior_lat(&[SurfacePoint::Vertex(f.mesh.n_vertices())]), Err(GpError::UnknownTarget(_))));
    assert!(m.posterior_gradient(&[f.mesh.n_faces()]).is_err());
}

#[test]
fn noiseless_vertex_variance_below_one_ring() {
    let f = fixture();
    let g = face_geometry(&f.mesh);
    let obs = ObservationSet::new(vec![40, 90, 150], vec![1.0, 2.0, 3.0], vec![0.0; 3]).unwrap();
    let m = GpModel::new(&f.basis, &obs, Hyperparams::new(6.0, 1.0, 0.0), exact(SolvePath::Auto)).unwrap();
    for &v in &obs.vertices {
        let pts: Vec<SurfacePoint> = std::iter::once(v).chain(g.one_rings[v].iter().copied()).map(SurfacePoint::Vertex).collect();
        let p = m.posterior_lat(&pts).unwrap();
        assert!(p.var[1..].iter().all(|&x| p.var[0] <= x));
    }
}

#[test]
fn gradient_in_plane_and_psd_on_sphere() {
    let mesh = shapes::icosphere(10.0, 2);
    let basis = build_basis(&mesh, &BasisConfig { num_basis: 30, layers: 0, ..Default::default() }).unwrap();
    let y: Vec<f64> = (0..60).map(|v| mesh.vertex(v).z * 2.0).collect();
    let obs = ObservationSet::new((0..60).collect(), y, vec![0.3; 60]).unwrap();
    let m = GpModel::new(&basis, &obs, Hyperparams::new(5.0, 1.0, 0.01), SolveOptions::default()).unwrap();
    let g = m.posterior_gradient_all().unwrap();
    let geo = face_geometry(&mesh);
    for (f, (mean, cov)) in g.mean.iter().zip(&g.cov).enumerate() {
        let n = geo.normals[f];
        assert!(mean.dot(&n).abs() <= 1e-8 * mean.norm().max(1e-12));
        assert!((cov * n).norm() <= 1e-8 * cov.norm().max(1e-12));
        assert!((cov - cov.transpose()).norm() <= 1e-12 * cov.norm().max(1e-300));
        let ev = cov.symmetric_eigenvalues();
        assert!(ev.iter().all(|&e| e >= -1e-9));
    }
}

#[test]
fn fit_improves_on_starts_and_ignores_scale() {
    let f = fixture();
    let obs = random_obs(80, 3, false);
    let cfg = FitConfig { starts: 4, ..Default::default() };
    let (m, diag) = fit_hyperparameters(&f.basis, &obs, &cfg).unwrap();
    let best = m.log_likelihood().unwrap();
    for s in &diag.starts {
        assert!(best >= s.start_log_lik - 1e-9);
    }
    let doubled = ObservationSet::new(obs.vertices.clone(), obs.y.iter().map(|v| 2.0 * v).collect(), obs.sigma.iter().map(|v| 2.0 * v).collect()).unwrap();
    let (m2, _) = fit_hyperparameters(&f.basis, &doubled, &cfg).unwrap();
    let (l1, l2) = (m.hyperparams().l, m2.hyperparams().l);
    assert!((l1 - l2).abs() <= 1e-3 * l1, "{l1} vs {l2}");
}

#[test]
fn fit_needs_two_observations() {
    let f = fixture();
    let one = ObservationSet::new(vec![1], vec![1.0], vec![0.1]).unwrap();
    assert!(fit_hyperparameters(&f.basis, &one, &FitConfig::default()).is_err());
}

#[test]
fn lengthscale_recovery_on_sphere() {
    let mesh = shapes::icosphere(25.0, 3);
    let basis = build_basis(&mesh, &BasisConfig { num_basis: 128, layers: 0, ..Default::default() }).unwrap();
    let hp = Hyperparams::new(20.0, 1.0, 0.0);
    let d = weight_variances(&basis.lambdas, &hp);
    let mut ls = Vec::new();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = d.iter().map(|v| v.sqrt() * rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng)).collect();
        let verts: Vec<usize> = sample(&mut rng, mesh.n_vertices(), 300).into_iter().collect();
        let y: Vec<f64> = verts
            .iter()
            .map(|&v| 50.0 + 10.0 * ((0..w.len()).map(|k| basis.phi_v[(v, k)] * w[k]).sum::<f64>() + 0.05 * rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng)))
            .collect();
        let obs = ObservationSet::new(verts, y, vec![0.5; 300]).unwrap();
        let (m, _) = fit_hyperparameters(&basis, &obs, &FitConfig { seed, starts: 4, ..Default::default() }).unwrap();
        ls.push(m.hyperparams().l);
    }
    assert!(ls.iter().all(|l| (10.0..=40.0).contains(l)), "{ls:?}");
}

#[test]
fn explained_variance_shape() {
    let f = fixture();
    let ev = explained_variance(&f.basis.lambdas, &Hyperparams::new(6.0, 1.0, 0.0));
    assert_eq!(*ev.last().unwrap(), 100.0);
    assert!(ev.windows(2).all(|w| w[0] <= w[1]));
}

fn gram_min_eig(k: &Mat<f64>) -> (f64, f64) {
    let ev = k.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    let tr: f64 = (0..k.nrows()).map(|i| k[(i, i)]).sum();
    (ev.iter().cloned().fold(f64::INFINITY, f64::min), tr)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn density_positive_decreasing(w1 in 0.0f64..10.0, dw in 1e-6f64..5.0, l in 0.5f64..50.0) {
        for nu in [Smoothness::Half, Smoothness::ThreeHalves, Smoothness::FiveHalves] {
            let a = spectral_density(w1, nu, l);
            let b = spectral_density(w1 + dw, nu, l);
            prop_assert!(a > 0.0 && b > 0.0 && b < a);
        }
    }

    #[test]
    fn gram_is_psd(seed in 0u64..1000, l in 1.0f64..30.0) {
        let f = fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<SurfacePoint> = (0..40).map(|_| if rng.random_bool(0.5) {
            SurfacePoint::Vertex(rng.random_range(0..f.mesh.n_vertices()))
        } else {
            SurfacePoint::Centroid(rng.random_range(0..f.mesh.n_faces()))
        }).collect();
        let k = prior_covariance(&f.basis, &Hyperparams::new(l, 1.0, 0.0), &pts, &pts).unwrap();
        let (min, tr) = gram_min_eig(&k);
        prop_assert!(min >= -1e-8 * tr);
    }

    #[test]
    fn woodbury_equals_dense(seed in 0u64..1000, hetero in any::<bool>(), n in 5usize..60) {
        let f = fixture();
        let obs = random_obs(n, seed, hetero);
        let hp = Hyperparams::new(5.0, 1.4, 0.02);
        let st = Standardization::from_data(&obs.y);
        let ws = LikelihoodWorkspace::new(&f.basis, &obs, st).unwrap();
        let a = ws.log_likelihood(&hp, &exact(SolvePath::Dense)).unwrap();
        let b = ws.log_likelihood(&hp, &exact(SolvePath::Woodbury)).unwrap();
        prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
        let md = GpModel::new(&f.basis, &obs, hp, exact(SolvePath::Dense)).unwrap();
        let mw = GpModel::new(&f.basis, &obs, hp, exact(SolvePath::Woodbury)).unwrap();
        prop_assert!((md.log_likelihood().unwrap() - a).abs() < 1e-8);
        let pd = md.posterior_all().unwrap();
        let pw = mw.posterior_all().unwrap();
        for i in 0..pd.mean.len() {
            prop_assert!((pd.mean[i] - pw.mean[i]).abs() < 1e-8);
            prop_assert!((pd.var[i] - pw.var[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn nugget_equals_sigma_shift(seed in 0u64..1000, delta in 0.0f64..0.5) {
        let f = fixture();
        let obs = random_obs(30, seed, true);
        let st = Standardization::from_data(&obs.y);
        let hp = Hyperparams::new(5.0, 1.0, 0.01);
        let a = LikelihoodWorkspace::new(&f.basis, &obs, st).unwrap()
            .log_likelihood(&Hyperparams { eta: hp.eta + delta, ..hp }, &exact(SolvePath::Woodbury)).unwrap();
        // δ in standardized units becomes δ·sd² in ms²
        let shifted = ObservationSet::new(obs.vertices.clone(), obs.y.clone(),
            obs.sigma.iter().map(|s| (s * s + delta * st.sd * st.sd).sqrt()).collect()).unwrap();
        let b = LikelihoodWorkspace::new(&f.basis, &shifted, st).unwrap().log_likelihood(&hp, &exact(SolvePath::Woodbury)).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn posterior_contraction(seed in 0u64..1000) {
        let f = fixture();
        let obs = random_obs(21, seed, true);
        let st = Standardization::from_data(&obs.y);
        let hp = Hyperparams::new(5.0, 1.0, 0.01);
        let fewer = ObservationSet::new(obs.vertices[..20].to_vec(), obs.y[..20].to_vec(), obs.sigma[..20].to_vec()).unwrap();
        let a = GpModel::with_standardization(&f.basis, &fewer, hp, st, exact(SolvePath::Auto)).unwrap().posterior_all().unwrap();
        let b = GpModel::with_standardization(&f.basis, &obs, hp, st, exact(SolvePath::Auto)).unwrap().posterior_all().unwrap();
        for i in 0..a.var.len() {
            prop_assert!(b.var[i] <= a.var[i] + 1e-9);
        }
    }

    #[test]
    fn gradient_is_linear_in_data(seed in 0u64..1000) {
        let f = fixture();
        let o1 = random_obs(25, seed, false);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 77);
        let y2: Vec<f64> = (0..25).map(|_| rng.random_range(-3.0..3.0)).collect();
        let sum: Vec<f64> = o1.y.iter().zip(&y2).map(|(a, b)| a + b).collect();
        let hp = Hyperparams::new(5.0, 1.0, 0.01);
        let grad = |y: Vec<f64>| {
            let o = ObservationSet::new(o1.vertices.clone(), y, o1.sigma.clone()).unwrap();
            GpModel::with_standardization(&f.basis, &o, hp, Standardization::IDENTITY, SolveOptions::default())
                .unwrap().posterior_gradient_all().unwrap().mean
        };
        let (g1, g2, gs) = (grad(o1.y.clone()), grad(y2), grad(sum));
        for i in 0..g1.len() {
            prop_assert!((g1[i] + g2[i] - gs[i]).norm() < 1e-9);
        }
    }

    #[test]
    fn standardized_data_moments(seed in 0u64..1000) {
        let obs = random_obs(30, seed, false);
        let st = Standardization::from_data(&obs.y);
        let z: Vec<f64> = obs.y.iter().map(|&v| st.forward(v)).collect();
        let mean = z.iter().sum::<f64>() / 30.0;
        let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 30.0).sqrt();
        prop_assert!(mean.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12);
    }
}
