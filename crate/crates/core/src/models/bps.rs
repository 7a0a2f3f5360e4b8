//! Rank-based Brownian particle systems on `R^d`.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::ModelFamily;
use crate::error::{Error, Result};
use crate::model::{rank_view, DomainKind, ModelSpec};

fn check_g(g: &[f64]) -> Result<()> {
    if g.len() < 2 {
        return Err(Error::InvalidParameters(format!("dimension must be >= 2, got {}", g.len())));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameters("drifts must be finite".into()));
    }
    Ok(())
}

/// Rank drift `b_i = g_{n_i(x)}`.
fn rank_drift(g: &[f64], x: &[f64]) -> Vec<f64> {
    let ranks = rank_view(x).expect("finite state").cell().ranks();
    ranks.iter().map(|&k| g[k]).collect()
}

/// Common-volatility system: `c = σ² I`, `p = exp(2 Σ_k g_k x_(k) / σ²)`.
pub fn make_common_vol_bps(g: Vec<f64>, sigma: f64) -> Result<ModelSpec> {
    check_g(&g)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameters("sigma must be positive".into()));
    }
    let d = g.len();
    let s2 = sigma * sigma;
    let cov = Arc::new(move |_: &[f64]| DMatrix::identity(d, d) * s2);
    let gl = g.clone();
    let lp = Arc::new(move |x: &[f64]| {
        let y = rank_view(x).expect("finite state").ranked;
        2.0 / s2 * gl.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>()
    });
    let gd = g.clone();
    let drift = Arc::new(move |x: &[f64]| rank_drift(&gd, x));
    Ok(ModelSpec::new(DomainKind::FullSpace(d), cov, lp)?
        .with_analytic_drift(drift)
        .piecewise_constant_cov(true)
        .exchangeable(true)
        .with_family(ModelFamily::CommonVolBps { g, sigma }))
}

/// Rank drifts and rank volatilities of a particle system.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVolParams {
    pub g: Vec<f64>,
    /// Per-rank variances `σ_k²`.
    pub sigma2: Vec<f64>,
}

impl RankVolParams {
    pub fn validate(&self) -> Result<()> {
        check_g(&self.g)?;
        if self.sigma2.len() != self.g.len() {
            return Err(Error::InvalidParameters(format!(
                "g has {} entries but sigma2 has {}",
                self.g.len(),
                self.sigma2.len()
            )));
        }
        if let Some(k) = self.sigma2.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameters(format!("sigma2[{}] must be positive", k + 1)));
        }
        Ok(())
    }
}

/// Rank-volatility system: `c = diag(σ²_{n_i})`, `p = exp(2 Σ_k g_k x_(k) / σ_k²)`.
///
/// The product `c p` jumps across cell boundaries, so the spec is tagged
/// non-conforming; the drift is the rank drift `g_{n_i}`.
pub fn make_rank_vol_bps(params: RankVolParams) -> Result<ModelSpec> {
    params.validate()?;
    let d = params.g.len();
    let s2 = params.sigma2.clone();
    let cov = Arc::new(move |x: &[f64]| {
        let ranks = rank_view(x).expect("finite state").cell().ranks();
        DMatrix::from_fn(d, d, |i, j| if i == j { s2[ranks[i]] } else { 0.0 })
    });
    let (g, s2) = (params.g.clone(), params.sigma2.clone());
    let lp = Arc::new(move |x: &[f64]| {
        let y = rank_view(x).expect("finite state").ranked;
        (0..d).map(|k| 2.0 * g[k] * y[k] / s2[k]).sum::<f64>()
    });
    let g = params.g.clone();
    let drift = Arc::new(move |x: &[f64]| rank_drift(&g, x));
    Ok(ModelSpec::new(DomainKind::FullSpace(d), cov, lp)?
        .with_analytic_drift(drift)
        .piecewise_constant_cov(true)
        .exchangeable(true)
        .non_conforming()
        .with_family(ModelFamily::RankVolBps(params)))
}

/// `½(σ²_{k+1} + σ²_{k−1}) ≤ σ²_k` for `k = 2..d−1`.
pub fn concavity_holds(sigma2: &[f64]) -> Vec<bool> {
    sigma2.windows(3).map(|w| 0.5 * (w[0] + w[2]) <= w[1] * (1.0 + 1e-12)).collect()
}

/// Stationary density of the ranked system, written in the ordered coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GapDensity {
    /// `λ_0 = 0, λ_1, …, λ_{d−1}, λ_d = 0`.
    pub lambda: Vec<f64>,
    /// `ρ(x) ∝ exp(Σ_k coefficients[k] · x_(k))`, with `coefficients[k] = 4(λ_k − λ_{k−1})`.
    pub coefficients: Vec<f64>,
    /// Concavity predicate for `k = 2..d−1`.
    pub concavity: Vec<bool>,
}

impl GapDensity {
    pub fn log_unnormalized(&self, x: &[f64]) -> f64 {
        let y = rank_view(x).expect("finite state").ranked;
        self.coefficients.iter().zip(&y).map(|(c, v)| c * v).sum()
    }

    pub fn unnormalized(&self, x: &[f64]) -> f64 {
        self.log_unnormalized(x).exp()
    }

    /// Exponential rates `−4λ_k` of the gaps `x_(k) − x_(k+1)`, `k = 1..d−1`.
    pub fn gap_rates(&self) -> Vec<f64> {
        let d = self.lambda.len() - 1;
        (1..d).map(|k| -4.0 * self.lambda[k]).collect()
    }

    /// True iff every gap rate is positive, i.e. the gap law is a probability.
    pub fn is_normalizable(&self) -> bool {
        self.gap_rates().iter().all(|&r| r > 0.0)
    }

    /// Marginal density of gap `k` (1-based) at `x`, if normalisable.
    pub fn gap_pdf(&self, k: usize, x: f64) -> Option<f64> {
        let r = *self.gap_rates().get(k.checked_sub(1)?)?;
        (r > 0.0).then(|| if x < 0.0 { 0.0 } else { r * (-r * x).exp() })
    }

    /// Mean of gap `k` (1-based), if normalisable.
    pub fn gap_mean(&self, k: usize) -> Option<f64> {
        let r = *self.gap_rates().get(k.checked_sub(1)?)?;
        (r > 0.0).then(|| 1.0 / r)
    }
}

/// Closed-form gap density under linear rank volatilities
/// `σ²_{k+1} − σ²_k = σ²_k − σ²_{k−1}`.
pub fn bps_gap_density(params: &RankVolParams) -> Result<GapDensity> {
    params.validate()?;
    let s2 = &params.sigma2;
    let d = s2.len();
    let scale = s2.iter().copied().fold(0.0, f64::max);
    for k in 1..d.saturating_sub(1) {
        let second = s2[k + 1] - 2.0 * s2[k] + s2[k - 1];
        if second.abs() > 1e-12 * scale {
            return Err(Error::AssumptionViolation(format!(
                "rank variances are not linear in the rank: sigma2[{}] - 2 sigma2[{}] + sigma2[{}] = {second}",
                k + 2,
                k + 1,
                k
            )));
        }
    }
    let mut lambda = vec![0.0; d + 1];
    let mut partial = 0.0;
    for k in 1..d {
        partial += params.g[k - 1];
        lambda[k] = partial / (s2[k - 1] + s2[k]);
    }
    let coefficients = (1..=d).map(|k| 4.0 * (lambda[k] - lambda[k - 1])).collect();
    Ok(GapDensity { lambda, coefficients, concavity: concavity_holds(s2) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_three_particle_example() {
        let p = RankVolParams { g: vec![1.0, 0.0, -1.0], sigma2: vec![1.0, 2.0, 3.0] };
        let gd = bps_gap_density(&p).unwrap();
        let want_l = [0.0, 1.0 / 3.0, 1.0 / 5.0, 0.0];
        let want_c = [4.0 / 3.0, -8.0 / 15.0, -4.0 / 5.0];
        for (a, b) in gd.lambda.iter().zip(want_l) {
            assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in gd.coefficients.iter().zip(want_c) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(gd.concavity, vec![true]);
        assert!(!gd.is_normalizable());
    }

    #[test]
    fn nonlinear_volatility_rejected() {
        let p = RankVolParams { g: vec![1.0, 0.0, -1.0], sigma2: vec![1.0, 3.0, 3.0] };
        assert!(matches!(bps_gap_density(&p), Err(Error::AssumptionViolation(_))));
    }

    #[test]
    fn two_particle_gap_rate() {
        // g = (−½, ½), σ² = 1: λ_1 = −¼, gap ~ Exp(1)
        let p = RankVolParams { g: vec![-0.5, 0.5], sigma2: vec![1.0, 1.0] };
        let gd = bps_gap_density(&p).unwrap();
        assert_eq!(gd.gap_rates(), vec![1.0]);
        assert_eq!(gd.gap_mean(1), Some(1.0));
        assert!((gd.gap_pdf(1, 0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_vol_spec_flags() {
        let spec = make_rank_vol_bps(RankVolParams { g: vec![-0.5, 0.5], sigma2: vec![1.0, 2.0] }).unwrap();
        assert!(!spec.is_conforming());
        let c = spec.cov(&[0.0, 1.0]);
        assert_eq!((c[(0, 0)], c[(1, 1)]), (2.0, 1.0));
        assert_eq!(spec.analytic_drift(&[0.0, 1.0]).unwrap(), vec![0.5, -0.5]);
    }

    #[test]
    fn common_vol_drift_is_rank_drift() {
        let spec = make_common_vol_bps(vec![-1.0, 0.0, 1.0], 1.0).unwrap();
        assert_eq!(spec.analytic_drift(&[0.2, -0.3, 1.5]).unwrap(), vec![0.0, 1.0, -1.0]);
        assert!(spec.is_conforming());
        assert!(spec.has_piecewise_constant_cov());
    }

    #[test]
    fn concavity_predicate() {
        assert_eq!(concavity_holds(&[1.0, 3.0, 2.0, 0.5]), vec![true, true]);
        assert_eq!(concavity_holds(&[1.0, 1.0, 3.0]), vec![false]);
    }
}
