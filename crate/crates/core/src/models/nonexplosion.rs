//! Integrability of `c_ii / x_i² · p` near the faces of the simplex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_stability, ModelFamily};
use crate::error::{Error, Result};
use crate::model::{CellLabel, DomainKind, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

/// Contribution of the shell `x_τ(d) ∈ (delta_lo, delta_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderRung {
    pub delta_hi: f64,
    pub delta_lo: f64,
    pub shell: f64,
    pub std_error: f64,
    /// Estimate of the integral over `x_τ(d) > delta_lo`.
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonExplosionReport {
    pub verdict: Verdict,
    pub diagnostics: String,
    pub ladder: Vec<LadderRung>,
}

const SHELLS: usize = 8;
const DEFAULT_SEED: u64 = 0x6e6f_6e65_7870;

/// Checks the non-explosion integrability condition with a fixed sampling seed.
pub fn check_nonexplosion(spec: &ModelSpec, samples: usize) -> Result<NonExplosionReport> {
    check_nonexplosion_seeded(spec, samples, DEFAULT_SEED)
}

/// Closed-form verdicts for the built-in simplex families, a Monte-Carlo
/// shell ladder otherwise. The Monte-Carlo path never reports `Violated`.
pub fn check_nonexplosion_seeded(spec: &ModelSpec, samples: usize, seed: u64) -> Result<NonExplosionReport> {
    let d = match spec.domain() {
        DomainKind::Simplex(d) => d,
        DomainKind::FullSpace(_) => return Err(Error::UnsupportedDomain),
    };
    match spec.family() {
        ModelFamily::NameBased(p) => Ok(match p.integrability_violation() {
            None => NonExplosionReport {
                verdict: Verdict::Satisfied,
                diagnostics: format!("name-based model with beta = {}: condition holds in closed form", p.beta),
                ladder: vec![],
            },
            Some(i) => NonExplosionReport {
                verdict: Verdict::Violated,
                diagnostics: format!(
                    "beta < 0 and alpha_{i}/sigma_{i}^2 below (1 - 2 beta) d - 2",
                    i = i + 1
                ),
                ladder: vec![],
            },
        }),
        ModelFamily::HybridAtlas(p) => {
            let r = check_stability(p)?;
            Ok(NonExplosionReport {
                verdict: if r.satisfied { Verdict::Satisfied } else { Verdict::Violated },
                diagnostics: format!(
                    "stability margins {:?}; worst {} at l = {}{}",
                    r.margins,
                    r.worst_margin,
                    r.witness_l,
                    if r.satisfied { "" } else { " (sufficient condition fails)" }
                ),
                ladder: vec![],
            })
        }
        _ => monte_carlo(spec, d, samples.max(1), seed),
    }
}

fn uniform_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Integrand `c_ii(x) / x_i² · p(x)` with `i` the smallest coordinate.
fn integrand(spec: &ModelSpec, x: &[f64], i: usize) -> f64 {
    spec.cov(x)[(i, i)] / (x[i] * x[i]) * spec.density(x)
}

/// `x_τ(d) = t`, the remaining names take `(1−t) z` with `z` uniform on the
/// ordered part of `Δ^{d−2}`; Jacobian `(1−t)^{d−2}`.
fn shell_estimate(
    spec: &ModelSpec,
    cells: &[CellLabel],
    lo: f64,
    hi: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    let d = spec.dim();
    // chart volume of Δ^{d−2}, split over (d−1)! orderings
    let zvol = 1.0 / factorial(d - 2) / factorial(d - 1);
    let log_ratio = (hi / lo).ln();
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let mut x = vec![0.0; d];
    for _ in 0..samples {
        let t = lo * (hi / lo).powf(rng.random::<f64>());
        let mut z = uniform_simplex(rng, d - 1);
        z.sort_by(|a, b| b.total_cmp(a));
        let mut est = 0.0;
        if (1.0 - t) * z[d - 2] >= t {
            let weight = t * log_ratio * (1.0 - t).powi(d as i32 - 2) * zvol;
            for tau in cells {
                for k in 0..d - 1 {
                    x[tau.name_at(k)] = (1.0 - t) * z[k];
                }
                let last = tau.name_at(d - 1);
                x[last] = t;
                est += weight * integrand(spec, &x, last);
            }
        }
        sum += est;
        sum2 += est * est;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

fn monte_carlo(spec: &ModelSpec, d: usize, samples: usize, seed: u64) -> Result<NonExplosionReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = if spec.is_exchangeable() { vec![CellLabel::identity(d)] } else { CellLabel::all(d) };
    let mult = if spec.is_exchangeable() { factorial(d) } else { 1.0 };
    let top = 1.0 / d as f64;
    let first = (0.1f64).min(0.5 * top);

    let (bulk, _) = shell_estimate(spec, &cells, first, top, samples, &mut rng);
    let mut cumulative = bulk * mult;
    let mut ladder = Vec::with_capacity(SHELLS);
    let mut hi = first;
    for _ in 0..SHELLS {
        let lo = hi / 10.0;
        let (s, se) = shell_estimate(spec, &cells, lo, hi, samples, &mut rng);
        let (s, se) = (s * mult, se * mult);
        cumulative += s;
        ladder.push(LadderRung { delta_hi: hi, delta_lo: lo, shell: s, std_error: se, cumulative });
        hi = lo;
    }

    let finite = ladder.iter().all(|r| r.cumulative.is_finite());
    let n = ladder.len();
    let (last, prev) = (ladder[n - 1].shell.abs(), ladder[n - 2].shell.abs());
    let converged = finite && last <= 1e-3 * ladder[n - 1].cumulative.abs() && last <= prev;
    let summary: Vec<String> = ladder.iter().map(|r| format!("{:.3e}:{:.6e}", r.delta_lo, r.cumulative)).collect();
    let verdict = if converged { Verdict::Satisfied } else { Verdict::Inconclusive };
    let diagnostics = format!(
        "Monte Carlo shell ladder ({} samples per shell), cumulative estimates {}{}",
        samples,
        summary.join(", "),
        if converged { "" } else { "; shells do not decay" }
    );
    Ok(NonExplosionReport { verdict, diagnostics, ladder })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rank_view, CovFn, ScalarFn};
    use crate::models::{make_polynomial, PolynomialParams};
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn wf_cov(d: usize) -> CovFn {
        Arc::new(move |x: &[f64]| DMatrix::from_fn(d, d, |i, j| if i == j { x[i] * (1.0 - x[i]) } else { -x[i] * x[j] }))
    }

    #[test]
    fn divergent_density_is_inconclusive() {
        // p ∝ x_(d)^{−3}: shell contributions grow by ~10^3 per decade
        let lp: ScalarFn = Arc::new(|x| -3.0 * rank_view(x).unwrap().ranked[2].ln());
        let spec = ModelSpec::new(DomainKind::Simplex(3), wf_cov(3), lp).unwrap().exchangeable(true);
        let r = check_nonexplosion(&spec, 2000).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        for w in r.ladder.windows(2) {
            assert!(w[1].cumulative > w[0].cumulative);
            let ratio = w[1].shell / w[0].shell;
            assert!((ratio / 1000.0 - 1.0).abs() < 0.2, "ratio {ratio}");
        }
    }

    #[test]
    fn jacobi_model_is_satisfied() {
        let spec = make_polynomial(PolynomialParams::wright_fisher(vec![2.0, 2.5, 3.0])).unwrap();
        let r = check_nonexplosion(&spec, 2000).unwrap();
        assert_eq!(r.verdict, Verdict::Satisfied, "{}", r.diagnostics);
    }

    #[test]
    fn full_space_unsupported() {
        let spec = crate::models::make_common_vol_bps(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(check_nonexplosion(&spec, 10), Err(Error::UnsupportedDomain));
    }

    #[test]
    fn closed_form_families() {
        let atlas = crate::models::make_atlas(3, 0.5, 1.0).unwrap();
        assert_eq!(check_nonexplosion(&atlas, 1).unwrap().verdict, Verdict::Satisfied);
        let bad = crate::models::make_atlas(3, -0.5, 1.0).unwrap();
        assert_eq!(check_nonexplosion(&bad, 1).unwrap().verdict, Verdict::Violated);
    }
}
