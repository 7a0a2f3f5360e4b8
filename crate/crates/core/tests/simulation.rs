use std::sync::Arc;

use nalgebra::DMatrix;
use ranksde_core::analysis::{ergodic_average, occupation_times, ranked_path};
use ranksde_core::model::{CovFn, ScalarFn};
use ranksde_core::models::*;
use ranksde_core::sim::*;
use ranksde_core::{DomainKind, Execution, ModelSpec, StatePoint};

fn brownian(d: usize, sigma: f64) -> ModelSpec {
    let cov: CovFn = Arc::new(move |_| DMatrix::identity(d, d) * (sigma * sigma));
    let lp: ScalarFn = Arc::new(|_| 0.0);
    ModelSpec::new(DomainKind::FullSpace(d), cov, lp).unwrap().piecewise_constant_cov(true)
}

#[test]
fn brownian_ensemble_mean_and_variance() {
    let sigma = 1.5;
    let spec = brownian(2, sigma);
    let x0 = StatePoint::new(spec.domain(), vec![0.3, -0.2]).unwrap();
    let c = SimConfig { dt: 0.1, horizon: 2.0, seed: 99, ..Default::default() };
    let e = simulate_ensemble(&spec, &x0, &c, 10_000, Execution::Parallel).unwrap();
    let inc: Vec<f64> = e.completed().map(|p| p.last().unwrap()[0] - 0.3).collect();
    let n = inc.len() as f64;
    let mean = inc.iter().sum::<f64>() / n;
    let var = inc.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 3.0 * (var / n).sqrt(), "mean {mean}");
    // Var(s²) = 2σ⁴T²/(n−1) for Gaussian increments
    let target = sigma * sigma * 2.0;
    let se = (2.0 / (n - 1.0)).sqrt() * target;
    assert!((var - target).abs() < 3.0 * se, "var {var} vs {target}");
}

#[test]
fn atlas_long_run_completes() {
    let spec = make_atlas(3, 0.5, 1.0).unwrap();
    let x0 = StatePoint::center(spec.domain());
    let c = SimConfig { dt: 1e-4, horizon: 1000.0, thinning: 1000, seed: 3, ..Default::default() };
    let p = simulate(&spec, &x0, &c).unwrap();
    assert_eq!(p.terminated, Termination::Completed);
    assert_eq!(p.len(), c.recorded_len());
}

#[test]
fn wright_fisher_preserves_simplex_for_a_million_steps() {
    let spec = make_polynomial(PolynomialParams::wright_fisher(vec![1.0, 1.0])).unwrap();
    let x0 = StatePoint::center(spec.domain());
    let c = SimConfig { dt: 1e-4, horizon: 100.0, seed: 4, ..Default::default() };
    let p = simulate(&spec, &x0, &c).unwrap();
    assert!(p.is_completed());
    for x in p.iter_states() {
        assert!(x[0] > 0.0 && x[1] > 0.0);
        assert!((x[0] + x[1] - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn shrinking_guard_never_creates_explosions() {
    let spec = make_polynomial(PolynomialParams::wright_fisher(vec![0.3, 0.3])).unwrap();
    let x0 = StatePoint::center(spec.domain());
    for seed in 0..8 {
        let mut previous_completed = false;
        for guard in [1e-2, 1e-4, 1e-8, 1e-12] {
            let c = SimConfig { dt: 1e-3, horizon: 5.0, seed, explosion_guard: Some(guard), ..Default::default() };
            let p = simulate(&spec, &x0, &c).unwrap();
            if previous_completed {
                assert!(p.is_completed(), "seed {seed} guard {guard}");
            }
            previous_completed = p.is_completed();
        }
    }
}

#[test]
fn bps_ensemble_occupancy_matches_long_path() {
    let spec = make_common_vol_bps(vec![-1.0, 0.0, 1.0], 1.0).unwrap();
    let x0 = StatePoint::new(spec.domain(), vec![0.3, 0.1, -0.2]).unwrap();
    let short = SimConfig { dt: 1e-2, horizon: 60.0, burn_in: 10.0, seed: 12, ..Default::default() };
    let e = simulate_ensemble(&spec, &x0, &short, 64, Execution::Parallel).unwrap();
    let per_path: Vec<f64> = e
        .completed()
        .map(|p| occupation_times(&ranked_path(p).unwrap()).unwrap().theta_ki[(0, 0)])
        .collect();
    let n = per_path.len() as f64;
    let mean = per_path.iter().sum::<f64>() / n;
    let se = (per_path.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0) / n).sqrt();

    let long = SimConfig { horizon: 64.0 * 50.0 + 10.0, ..short.clone() };
    let p = simulate(&spec, &x0, &long).unwrap();
    let rp = ranked_path(&p).unwrap();
    let top: Vec<f64> = (0..rp.len()).map(|m| (rp.rank_ids(m)[0] == 0) as u8 as f64).collect();
    let lp = ergodic_average(&top).unwrap();
    assert!((mean - lp.mean).abs() < 3.0 * se.hypot(lp.std_error), "{mean} ± {se} vs {lp:?}");
    assert!((lp.mean - 1.0 / 3.0).abs() < 0.03);
}

#[test]
fn thread_count_does_not_change_results() {
    let spec = make_atlas(3, 0.5, 1.0).unwrap();
    let x0 = StatePoint::center(spec.domain());
    let c = SimConfig { dt: 1e-3, horizon: 1.0, seed: 77, ..Default::default() };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| simulate_ensemble(&spec, &x0, &c, 16, Execution::Parallel).unwrap());
    let b = four.install(|| simulate_ensemble(&spec, &x0, &c, 16, Execution::Parallel).unwrap());
    assert_eq!(a.paths, b.paths);
}
