use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ranksde_core::analysis::uniform_simplex_point;
use ranksde_core::model::{diffusion_root, fd_drift};
use ranksde_core::models::*;
use ranksde_core::ModelSpec;

fn families() -> Vec<(&'static str, ModelSpec)> {
    vec![
        ("name_based_b0", make_name_based(NameBasedParams { beta: 0.0, alpha: vec![0.6, 0.9, 1.3], sigma: vec![1.0, 0.8, 1.2] }).unwrap()),
        ("name_based_bh", make_name_based(NameBasedParams { beta: 0.5, alpha: vec![0.6, 0.9, 1.3], sigma: vec![1.0, 0.8, 1.2] }).unwrap()),
        ("hybrid_b0", make_hybrid_atlas(HybridAtlasParams { beta: 0.0, gamma: vec![0.1, 0.0, -0.1], g: vec![-0.5, 0.1, 0.4], sigma: 0.9 }).unwrap()),
        ("hybrid_bh", make_hybrid_atlas(HybridAtlasParams { beta: 0.5, gamma: vec![0.1, 0.0, -0.1], g: vec![-0.5, 0.1, 0.4], sigma: 0.9 }).unwrap()),
        ("polynomial", make_polynomial(PolynomialParams {
            alpha: DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 0.5, 2.0, 0.5, 0.0]),
            a: vec![1.5, 0.7, 1.1],
        }).unwrap()),
    ]
}

#[test]
fn analytic_and_fd_drift_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (name, spec) in families() {
        let fd_spec = spec.without_analytic_drift();
        for _ in 0..200 {
            let x = uniform_simplex_point(&mut rng, 3);
            if x.iter().any(|&v| v < 1e-3) {
                continue;
            }
            let an = spec.analytic_drift(&x).unwrap();
            let fd = fd_drift(&fd_spec, &x).unwrap();
            let scale = an.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-8);
            for i in 0..3 {
                assert!((an[i] - fd[i]).abs() <= 1e-5 * scale, "{name} at {x:?}: {an:?} vs {fd:?}");
            }
        }
    }
}

#[test]
fn covariances_are_psd_and_tangent() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for (name, spec) in families() {
        for _ in 0..200 {
            let x = uniform_simplex_point(&mut rng, 3);
            let c = spec.cov(&x);
            assert!((&c - c.transpose()).norm() <= 1e-14 * c.norm().max(1.0), "{name}");
            let row_sums = &c * nalgebra::DVector::from_element(3, 1.0);
            assert!(row_sums.norm() <= 1e-14 * c.norm().max(1e-300), "{name}");
            let eig = SymmetricEigen::new(c.clone()).eigenvalues;
            assert!(eig.iter().all(|&l| l >= -1e-12 * c.norm()), "{name}: {eig}");
            let r = diffusion_root(&spec, &x).unwrap();
            assert!((&r * &r - &c).norm() <= 1e-9 * c.norm(), "{name}");
        }
    }
}

#[test]
fn hybrid_without_rank_drift_is_name_based() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for beta in [0.0, 0.3, 0.5] {
        for sigma in [1.0, 0.7] {
            let h = make_hybrid_atlas(HybridAtlasParams { beta, gamma: vec![0.4, 0.6, 0.9], g: vec![0.0; 3], sigma }).unwrap();
            let n = make_name_based(NameBasedParams { beta, alpha: vec![0.4, 0.6, 0.9], sigma: vec![sigma; 3] }).unwrap();
            let x0 = [0.3, 0.3, 0.4];
            let offset = n.log_density(&x0) - h.log_density(&x0);
            for _ in 0..50 {
                let x = uniform_simplex_point(&mut rng, 3);
                assert!((h.cov(&x) - n.cov(&x)).norm() <= 1e-12 * n.cov(&x).norm());
                let (lh, ln) = (h.log_density(&x), n.log_density(&x));
                assert!((ln - lh - offset).abs() <= 1e-12 * ln.abs().max(1.0));
                if sigma == 1.0 {
                    assert!((h.density(&x) / n.density(&x) - 1.0).abs() <= 1e-12);
                }
                let (bh, bn) = (h.analytic_drift(&x).unwrap(), n.analytic_drift(&x).unwrap());
                for i in 0..3 {
                    assert!((bh[i] - bn[i]).abs() <= 1e-12 * (1.0 + bn[i].abs()));
                }
            }
        }
    }
}

#[test]
fn stability_is_invariant_under_gamma_permutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let base = HybridAtlasParams { beta: 0.2, gamma: vec![0.3, -0.2, 0.1, 0.0, -0.4], g: vec![-0.3, -0.1, 0.0, 0.2, 0.5], sigma: 1.1 };
    let want = check_stability(&base).unwrap();
    for _ in 0..100 {
        let mut p = base.clone();
        p.gamma.shuffle(&mut rng);
        assert_eq!(check_stability(&p).unwrap(), want);
    }
}

#[test]
fn ranked_density_matches_atlas_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let p = HybridAtlasParams { beta: 0.4, gamma: vec![0.2, -0.1, 0.05, 0.3], g: vec![-0.6, -0.2, 0.3, 0.5], sigma: 0.8 };
    let spec = make_hybrid_atlas(p.clone()).unwrap();
    for _ in 0..1000 {
        let mut y = uniform_simplex_point(&mut rng, 4);
        y.sort_by(|a, b| b.total_cmp(a));
        let q = ranked_density_q(&spec, &y).unwrap();
        let closed = p.ranked_log_density(&y).exp();
        assert!((q / closed - 1.0).abs() <= 1e-10);
    }
}

proptest! {
    #[test]
    fn name_based_drift_is_tangent(a in prop::collection::vec(0.2f64..3.0, 4), beta in -0.2f64..1.0, seed in 0u64..1000) {
        let alpha: Vec<f64> = a.iter().map(|v| v + 10.0).collect();
        let spec = make_name_based(NameBasedParams { beta, alpha, sigma: vec![1.0; 4] }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = uniform_simplex_point(&mut rng, 4);
        let b = spec.analytic_drift(&x).unwrap();
        prop_assert!(b.iter().sum::<f64>().abs() < 1e-10 * (1.0 + b.iter().map(|v| v.abs()).sum::<f64>()));
    }

    #[test]
    fn atlas_stability_margin(d in 2usize..8, g in 0.01f64..2.0, s in 0.3f64..2.0) {
        let r = check_stability(&HybridAtlasParams::classic_atlas(d, g, s)).unwrap();
        prop_assert!(r.satisfied);
        prop_assert!((r.worst_margin - g / (s * s)).abs() < 1e-12);
    }
}

#[test]
fn zero_drift_hybrid_is_not_stable() {
    let p = HybridAtlasParams { beta: 0.0, gamma: vec![0.0; 3], g: vec![0.0; 3], sigma: 1.0 };
    assert!(!check_stability(&p).unwrap().satisfied);
}

#[test]
fn zero_drift_bps_has_flat_lambda() {
    let gd = bps_gap_density(&RankVolParams { g: vec![0.0; 4], sigma2: vec![1.0; 4] }).unwrap();
    assert!(gd.lambda.iter().all(|&l| l == 0.0));
    assert!(gd.coefficients.iter().all(|&c| c == 0.0));
}
