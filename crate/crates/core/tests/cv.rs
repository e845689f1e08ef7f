use gpmi::cv::{element_cv, element_gradient, maximin_select, percentile, sample_cv, wave_cv, WAVE_NEIGHBOURS};
use gpmi::gp::GradientPosterior;
use gpmi::mesh::{shapes, MeshGraph, Vec3};
use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn posterior(mean: Vec<Vec3>, cov: Vec<Matrix3<f64>>) -> GradientPosterior {
    GradientPosterior { faces: (0..mean.len()).collect(), mean, cov }
}

fn in_plane(s: f64) -> Matrix3<f64> {
    Matrix3::new(s * s, 0.0, 0.0, 0.0, s * s, 0.0, 0.0, 0.0, 0.0)
}

#[test]
fn zero_covariance_is_degenerate() {
    let g = posterior(vec![Vec3::new(0.6, 0.8, 0.0)], vec![Matrix3::zeros()]);
    let c = &sample_cv(&g, 100, 1).unwrap().centroids[0];
    assert!(c.grad_pct.iter().all(|&p| (p - 1.0).abs() < 1e-15));
    assert!(c.cv_pct.iter().all(|&p| (p - 1.0).abs() < 1e-15));
    assert_eq!(c.grad_sd, 0.0);
    assert!((c.grad_mean - 1.0).abs() < 1e-15);
    assert!(!c.undefined);
}

#[test]
fn rayleigh_median() {
    let s = 0.7;
    let n = 2000;
    let g = posterior(vec![Vec3::zeros(); 20], vec![in_plane(s); 20]);
    let want = s * (2.0 * 2f64.ln()).sqrt();
    let se = s / ((2.0 * 2f64.ln()).sqrt() * (n as f64).sqrt());
    for c in &sample_cv(&g, n, 5).unwrap().centroids {
        assert!((c.grad_pct[2] - want).abs() <= 3.0 * se, "{} vs {want}", c.grad_pct[2]);
        assert!(c.undefined);
    }
}

#[test]
fn seed_determinism_across_threads() {
    let g = posterior((0..40).map(|i| Vec3::new(0.1 * i as f64, 0.3, 0.0)).collect(), vec![in_plane(0.2); 40]);
    let run = |t: usize| rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap().install(|| sample_cv(&g, 500, 11).unwrap());
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a, sample_cv(&g, 500, 11).unwrap());
    assert_ne!(a, sample_cv(&g, 500, 12).unwrap());
}

#[test]
fn non_psd_rejected() {
    let mut c = in_plane(1.0);
    c[(0, 0)] = -1.0;
    assert!(sample_cv(&posterior(vec![Vec3::zeros()], vec![c]), 10, 0).is_err());
    assert!(sample_cv(&posterior(vec![Vec3::zeros()], vec![in_plane(1.0)]), 1, 0).is_err());
}

#[test]
fn scaled_covariance_scales_sd() {
    let mean = Vec3::new(1.0, 0.5, 0.0);
    let a = &sample_cv(&posterior(vec![mean], vec![in_plane(0.1)]), 4000, 3).unwrap().centroids[0];
    let b = &sample_cv(&posterior(vec![mean], vec![in_plane(0.2)]), 4000, 9).unwrap().centroids[0];
    let se = a.grad_sd / (2.0 * 4000f64).sqrt();
    assert!((b.grad_sd - 2.0 * a.grad_sd).abs() <= 3.0 * (2.0 * se) * 2f64.sqrt(), "{} vs {}", b.grad_sd, a.grad_sd);
}

#[test]
fn element_examples() {
    let p = [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.2, 1.0, 0.0)];
    let c = element_cv(p, p.map(|q| 2.0 * q.x)).unwrap();
    assert!((c.gradient - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
    assert!((c.cv.unwrap() - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-12);
    let flat = element_cv(p, [4.0; 3]).unwrap();
    assert_eq!(flat.gradient, Vec3::zeros());
    assert!(flat.cv.is_none());
    assert!(element_gradient([Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0], [0.0, 1.0, 2.0]).is_none());
}

#[test]
fn wave_flat_plane_wave() {
    let m = shapes::square_grid(21, 20.0);
    let g = MeshGraph::new(&m);
    let lat: Vec<f64> = m.vertices().map(|p| 1.5 * p.x - 0.5 * p.y).collect();
    let slope = Vec3::new(1.5, -0.5, 0.0);
    for f in [100, 350, 411] {
        let c = wave_cv(&g, &m, &lat, f, WAVE_NEIGHBOURS).unwrap();
        assert!((c.gradient.norm() - slope.norm()).abs() <= 0.01 * slope.norm());
    }
    let flat = wave_cv(&g, &m, &vec![3.0; m.n_vertices()], 200, WAVE_NEIGHBOURS).unwrap();
    assert!(flat.cv.is_none());
}

#[test]
fn wave_collinear_rejected() {
    let m = shapes::rect_grid(30, 2, 29.0, 0.5);
    let g = MeshGraph::new(&m);
    let lat: Vec<f64> = m.vertices().map(|p| p.x).collect();
    assert!(wave_cv(&g, &m, &lat, 10, 3).is_err());
}

#[test]
fn wave_matches_element_on_cap() {
    let r = 25.0;
    let m = shapes::spherical_cap(r, 1.2, 5);
    let g = MeshGraph::new(&m);
    // wave from a point off the pole, speed 0.8 mm/ms along great circles
    let src = Vec3::new(0.3, 0.0, 1.0).normalize();
    let lat: Vec<f64> = m.vertices().map(|p| r * (p.normalize().dot(&src)).clamp(-1.0, 1.0).acos() / 0.8).collect();
    let mut diffs = Vec::new();
    for f in 0..m.n_faces() {
        let c = m.face_centroid(f).normalize();
        let theta = c.z.acos();
        let from_src = c.dot(&src).acos();
        if theta < 0.8 && from_src > 0.25 {
            let [a, b, d] = m.face(f);
            let e = element_cv([m.vertex(a), m.vertex(b), m.vertex(d)], [lat[a], lat[b], lat[d]]).unwrap();
            let w = wave_cv(&g, &m, &lat, f, WAVE_NEIGHBOURS).unwrap();
            let (se, sw) = (e.speed().unwrap(), w.speed().unwrap());
            diffs.push((se - sw).abs() / se);
        }
    }
    diffs.sort_by(f64::total_cmp);
    assert!(diffs.len() > 100);
    let med = percentile(&diffs, 50.0);
    assert!(med < 0.10, "median discrepancy {med}");
}

#[test]
fn maximin_examples() {
    let m = shapes::rect_grid(20, 2, 19.0, 1.0);
    let g = MeshGraph::new(&m);
    let line: Vec<usize> = (0..20).collect();
    assert_eq!(maximin_select(&g, &line, 20, 3, 0).unwrap(), line);
    let pair = maximin_select(&g, &line, 2, 2000, 1).unwrap();
    assert_eq!(pair, vec![0, 19]);
    let a = maximin_select(&g, &(0..40).collect::<Vec<_>>(), 6, 300, 4).unwrap();
    assert_eq!(a, maximin_select(&g, &(0..40).collect::<Vec<_>>(), 6, 300, 4).unwrap());
}

#[test]
fn maximin_beats_random_pairs() {
    let m = shapes::disc(10.0, 6);
    let g = MeshGraph::new(&m);
    let cand: Vec<usize> = (0..m.n_vertices()).collect();
    let best = maximin_select(&g, &cand, 8, 500, 2).unwrap();
    let score = |s: &[usize]| {
        let pts: Vec<_> = s.iter().map(|&v| gpmi::mesh::SurfacePoint::Vertex(v)).collect();
        g.min_pairwise_distance(&pts).unwrap()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let random: f64 = (0..50)
        .map(|_| score(&sample(&mut rng, cand.len(), 8).into_iter().collect::<Vec<_>>()))
        .sum::<f64>()
        / 50.0;
    assert!(score(&best) > random, "{} vs mean random {random}", score(&best));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn percentiles_and_inversion(mx in -2.0f64..2.0, my in -2.0f64..2.0, s in 0.0f64..1.5, seed in 0u64..500) {
        let g = posterior(vec![Vec3::new(mx, my, 0.0)], vec![in_plane(s)]);
        let c = &sample_cv(&g, 200, seed).unwrap().centroids[0];
        for i in 0..4 {
            prop_assert!(c.grad_pct[i] <= c.grad_pct[i + 1]);
            prop_assert!(c.cv_pct[i] <= c.cv_pct[i + 1]);
        }
        for i in 0..5 {
            prop_assert_eq!(c.cv_pct[i], 1.0 / c.grad_pct[4 - i]);
        }
        prop_assert!(c.cv_iqr >= 0.0);
        prop_assert_eq!(c.cv_iqr, c.cv_pct[3] - c.cv_pct[1]);
    }

    #[test]
    fn element_gradient_matches_plane(
        ax in -5.0f64..5.0, ay in -5.0f64..5.0, az in -5.0f64..5.0,
        bx in -5.0f64..5.0, by in -5.0f64..5.0, bz in -5.0f64..5.0,
        cx in -5.0f64..5.0, cy in -5.0f64..5.0, cz in -5.0f64..5.0,
        gx in -3.0f64..3.0, gy in -3.0f64..3.0, gz in -3.0f64..3.0, t0 in -10.0f64..10.0,
    ) {
        let p = [Vec3::new(ax, ay, az), Vec3::new(bx, by, bz), Vec3::new(cx, cy, cz)];
        let cross = (p[1] - p[0]).cross(&(p[2] - p[0]));
        prop_assume!(cross.norm() > 0.5);
        let n = cross.normalize();
        let g = Vec3::new(gx, gy, gz);
        let tangential = g - n * n.dot(&g);
        let got = element_gradient(p, p.map(|q| t0 + g.dot(&q))).unwrap();
        prop_assert!((got - tangential).norm() < 1e-9 * (1.0 + g.norm()) * 10.0);
    }

    #[test]
    fn percentile_monotone(mut v in proptest::collection::vec(-100.0f64..100.0, 1..50), p in 0.0f64..100.0, q in 0.0f64..100.0) {
        v.sort_by(f64::total_cmp);
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(percentile(&v, lo) <= percentile(&v, hi));
        prop_assert_eq!(percentile(&v, 0.0), v[0]);
        prop_assert_eq!(percentile(&v, 100.0), *v.last().unwrap());
    }
}
