use std::sync::Arc;

use super::{vs, ModelFamily};
use crate::error::{Error, Result};
use crate::model::{next_permutation, rank_view, DomainKind, ModelSpec};

/// Hybrid Atlas model: name-based `γ`, rank-based `g`, common volatility `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridAtlasParams {
    pub beta: f64,
    pub gamma: Vec<f64>,
    /// Rank-based drifts `g_1..g_d`, `g_1` for the largest coordinate.
    pub g: Vec<f64>,
    pub sigma: f64,
}

impl HybridAtlasParams {
    /// Classical Atlas: `γ = 0`, `β = 0`, `g_k = −g` for `k < d`, `g_d = (d−1)g`.
    pub fn classic_atlas(d: usize, g: f64, sigma: f64) -> Self {
        let mut gs = vec![-g; d];
        gs[d - 1] = (d as f64 - 1.0) * g;
        Self { beta: 0.0, gamma: vec![0.0; d], g: gs, sigma }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d < 2 {
            return Err(Error::InvalidParameters(format!("dimension must be >= 2, got {d}")));
        }
        if self.g.len() != d {
            return Err(Error::InvalidParameters(format!(
                "gamma has {d} entries but g has {}",
                self.g.len()
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameters("sigma must be positive".into()));
        }
        if !self.beta.is_finite() || self.gamma.iter().chain(&self.g).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters("parameters must be finite".into()));
        }
        Ok(())
    }

    /// Exponent of `x_i` in cell where name `i` holds rank `k`.
    fn exponent(&self, gamma: f64, g: f64) -> f64 {
        let shift = if self.beta != 0.0 { 2.0 * self.beta - 1.0 } else { -1.0 };
        2.0 * (gamma + g) / (self.sigma * self.sigma) + shift
    }

    /// Exponents `m_i` at `x`, using the rank `n_i(x)` of each name.
    fn exponents_at(&self, x: &[f64]) -> Vec<f64> {
        let ranks = rank_view(x).expect("finite state").cell().ranks();
        (0..x.len()).map(|i| self.exponent(self.gamma[i], self.g[ranks[i]])).collect()
    }

    fn norm_factor_exp(&self) -> f64 {
        if self.beta != 0.0 {
            vs::norm_exponent(self.dim(), self.beta) / (2.0 * self.beta)
        } else {
            0.0
        }
    }

    /// Log of `‖x‖_{2β}^{…}` (zero when β = 0).
    fn log_norm(&self, x: &[f64]) -> f64 {
        if self.beta == 0.0 {
            return 0.0;
        }
        let n: f64 = x.iter().map(|v| v.powf(2.0 * self.beta)).sum();
        self.norm_factor_exp() * n.ln()
    }

    /// Unnormalised log density of the ranked vector `y` (sorted descending),
    /// summing over all `d!` placements of the names.
    pub fn ranked_log_density(&self, y: &[f64]) -> f64 {
        let d = y.len();
        let mut perm: Vec<usize> = (0..d).collect();
        let mut terms = Vec::new();
        loop {
            let t: f64 = (0..d).map(|k| self.exponent(self.gamma[perm[k]], self.g[k]) * y[k].ln()).sum();
            terms.push(t);
            if !next_permutation(&mut perm) {
                break;
            }
        }
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.log_norm(y) + max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    /// Market-weight drift with `φ_i = γ_i + g_{n_i}` and common `σ`.
    pub fn market_weight_drift(&self, x: &[f64]) -> Vec<f64> {
        let ranks = rank_view(x).expect("finite state").cell().ranks();
        let phi: Vec<f64> = (0..x.len()).map(|i| self.gamma[i] + self.g[ranks[i]]).collect();
        vs::market_weight_drift(self.beta, &vec![self.sigma * self.sigma; x.len()], &phi, x)
    }
}

/// Builds the hybrid Atlas simplex model.
pub fn make_hybrid_atlas(params: HybridAtlasParams) -> Result<ModelSpec> {
    params.validate()?;
    let d = params.dim();
    let beta = params.beta;
    let s = Arc::new(vec![params.sigma * params.sigma; d]);
    let p = Arc::new(params.clone());

    let s_cov = s.clone();
    let cov = Arc::new(move |x: &[f64]| vs::covariance(beta, &s_cov, x));
    let p_lp = p.clone();
    let lp = Arc::new(move |x: &[f64]| {
        let m = p_lp.exponents_at(x);
        p_lp.log_norm(x) + m.iter().zip(x).map(|(mi, xi)| mi * xi.ln()).sum::<f64>()
    });
    let ones = vec![1.0; d];
    let drift = Arc::new(move |x: &[f64]| {
        let m = p.exponents_at(x);
        let dlogp = vs::tangent_dlogp(beta, p.norm_factor_exp(), &ones, &m, x);
        vs::drift(beta, &s, x, &dlogp)
    });
    let exchangeable = params.gamma.iter().all(|&v| v == params.gamma[0]);
    Ok(ModelSpec::new(DomainKind::Simplex(d), cov, lp)?
        .with_analytic_drift(drift)
        .exchangeable(exchangeable)
        .with_family(ModelFamily::HybridAtlas(params)))
}

/// Classical Atlas model on the simplex.
pub fn make_atlas(d: usize, g: f64, sigma: f64) -> Result<ModelSpec> {
    make_hybrid_atlas(HybridAtlasParams::classic_atlas(d, g, sigma))
}

/// Outcome of the sufficient stability condition for hybrid Atlas models.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub satisfied: bool,
    /// Left-hand side for `l = 1..d−1`, minimised over name permutations.
    pub margins: Vec<f64>,
    pub worst_margin: f64,
    /// The `l` attaining the worst margin.
    pub witness_l: usize,
}

/// Evaluates `2βl + 2 min{1−β, 0} + σ^{−2} Σ_{k≤l} (g_{d+1−k} + γ_{τ(d+1−k)}) > 0`
/// for every `l` and every `τ`; the binding `τ` puts the `l` smallest `γ` at the bottom.
pub fn check_stability(params: &HybridAtlasParams) -> Result<StabilityReport> {
    params.validate()?;
    let d = params.dim();
    let s2 = params.sigma * params.sigma;
    let mut gamma = params.gamma.clone();
    gamma.sort_by(f64::total_cmp);
    let base = 2.0 * (1.0 - params.beta).min(0.0);
    let mut margins = Vec::with_capacity(d - 1);
    let (mut gsum, mut csum) = (0.0, 0.0);
    for l in 1..d {
        gsum += params.g[d - l];
        csum += gamma[l - 1];
        margins.push(2.0 * params.beta * l as f64 + base + (gsum + csum) / s2);
    }
    let (idx, &worst) = margins
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("d >= 2");
    Ok(StabilityReport { satisfied: worst > 0.0, margins, worst_margin: worst, witness_l: idx + 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fd_drift;

    #[test]
    fn atlas_margin_is_g_over_sigma2() {
        for d in 2..7 {
            let r = check_stability(&HybridAtlasParams::classic_atlas(d, 0.3, 2.0)).unwrap();
            assert!(r.satisfied);
            assert!((r.worst_margin - 0.3 / 4.0).abs() < 1e-14);
            assert_eq!(r.witness_l, d - 1);
        }
    }

    #[test]
    fn pure_beta_one() {
        let p = HybridAtlasParams { beta: 1.0, gamma: vec![0.0; 3], g: vec![0.0; 3], sigma: 1.0 };
        let r = check_stability(&p).unwrap();
        assert_eq!(r.margins, vec![2.0, 4.0]);
        assert!(r.satisfied);
        assert_eq!(r.witness_l, 1);
    }

    #[test]
    fn negative_atlas_drift_fails() {
        let r = check_stability(&HybridAtlasParams::classic_atlas(3, -0.1, 1.0)).unwrap();
        assert!(!r.satisfied);
    }

    #[test]
    fn analytic_drift_matches_fd_inside_cells() {
        let p = HybridAtlasParams { beta: 0.3, gamma: vec![0.1, -0.2, 0.05], g: vec![-0.3, 0.1, 0.4], sigma: 0.8 };
        let spec = make_hybrid_atlas(p).unwrap();
        for x in [[0.2, 0.3, 0.5], [0.6, 0.15, 0.25], [0.34, 0.33, 0.33]] {
            let an = spec.analytic_drift(&x).unwrap();
            let fd = fd_drift(&spec, &x).unwrap();
            for i in 0..3 {
                assert!((an[i] - fd[i]).abs() < 1e-5 * (1.0 + an[i].abs()), "{x:?}: {an:?} vs {fd:?}");
            }
        }
    }

    #[test]
    fn atlas_market_weight_form_agrees() {
        let p = HybridAtlasParams::classic_atlas(3, 0.5, 1.2);
        let spec = make_hybrid_atlas(p.clone()).unwrap();
        let x = [0.45, 0.2, 0.35];
        let an = spec.analytic_drift(&x).unwrap();
        let mw = p.market_weight_drift(&x);
        for i in 0..3 {
            assert!((an[i] - mw[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn density_continuous_across_ties() {
        let p = HybridAtlasParams { beta: 0.2, gamma: vec![0.1, 0.3, -0.1], g: vec![-0.5, 0.2, 0.6], sigma: 1.0 };
        let spec = make_hybrid_atlas(p).unwrap();
        let eps = 1e-9;
        let a = spec.log_density(&[0.3 + eps, 0.3 - eps, 0.4]);
        let b = spec.log_density(&[0.3 - eps, 0.3 + eps, 0.4]);
        assert!((a - b).abs() < 1e-6);
    }
}
