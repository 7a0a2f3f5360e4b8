use std::sync::Arc;

use super::{vs, ModelFamily};
use crate::error::{Error, Result};
use crate::model::{DomainKind, ModelSpec};

/// Volatility-stabilised family with purely name-based drift parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NameBasedParams {
    pub beta: f64,
    pub alpha: Vec<f64>,
    /// Per-name volatility scale `σ_i` (not squared).
    pub sigma: Vec<f64>,
}

impl NameBasedParams {
    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    fn sigma2(&self) -> Vec<f64> {
        self.sigma.iter().map(|s| s * s).collect()
    }

    /// Exponents `2α_i/σ_i² + 2β − 1` (β ≠ 0) or `2α_i/σ_i² − 1` (β = 0).
    fn exponents(&self) -> Vec<f64> {
        let shift = if self.beta != 0.0 { 2.0 * self.beta - 1.0 } else { -1.0 };
        self.alpha.iter().zip(&self.sigma).map(|(a, s)| 2.0 * a / (s * s) + shift).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d < 2 {
            return Err(Error::InvalidParameters(format!("dimension must be >= 2, got {d}")));
        }
        if self.sigma.len() != d {
            return Err(Error::InvalidParameters(format!(
                "alpha has {d} entries but sigma has {}",
                self.sigma.len()
            )));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidParameters("beta must be finite".into()));
        }
        for i in 0..d {
            if !(self.alpha[i] > 0.0 && self.alpha[i].is_finite()) {
                return Err(Error::InvalidParameters(format!("alpha[{}] must be positive", i + 1)));
            }
            if !(self.sigma[i] > 0.0 && self.sigma[i].is_finite()) {
                return Err(Error::InvalidParameters(format!("sigma[{}] must be positive", i + 1)));
            }
        }
        if let Some(i) = self.integrability_violation() {
            let bound = (1.0 - 2.0 * self.beta) * d as f64 - 2.0;
            return Err(Error::InvalidParameters(format!(
                "beta < 0 requires alpha_i / sigma_i^2 >= (1 - 2 beta) d - 2 = {bound} for every i \
                 (integrability of p); fails at i = {} with alpha/sigma^2 = {}",
                i + 1,
                self.alpha[i] / (self.sigma[i] * self.sigma[i])
            )));
        }
        Ok(())
    }

    /// First index breaking the β < 0 integrability bound, if any.
    pub fn integrability_violation(&self) -> Option<usize> {
        if self.beta >= 0.0 {
            return None;
        }
        let bound = (1.0 - 2.0 * self.beta) * self.dim() as f64 - 2.0;
        (0..self.dim()).find(|&i| self.alpha[i] / (self.sigma[i] * self.sigma[i]) < bound)
    }

    /// Market-weight drift with `φ_i = α_i`, as produced from the stock model.
    pub fn market_weight_drift(&self, x: &[f64]) -> Vec<f64> {
        vs::market_weight_drift(self.beta, &self.sigma2(), &self.alpha, x)
    }
}

fn log_density(beta: f64, s: &[f64], m: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    let mut lp: f64 = m.iter().zip(x).map(|(mi, xi)| mi * xi.ln()).sum();
    if beta != 0.0 {
        let n: f64 = (0..d).map(|i| x[i].powf(2.0 * beta) / s[i]).sum();
        lp += vs::norm_exponent(d, beta) / (2.0 * beta) * n.ln();
    }
    lp
}

/// Builds the name-based simplex model; its density is left unnormalised.
pub fn make_name_based(params: NameBasedParams) -> Result<ModelSpec> {
    params.validate()?;
    let d = params.dim();
    let beta = params.beta;
    let s = Arc::new(params.sigma2());
    let m = Arc::new(params.exponents());
    let e = if beta != 0.0 { vs::norm_exponent(d, beta) / (2.0 * beta) } else { 0.0 };

    let s_cov = s.clone();
    let cov = Arc::new(move |x: &[f64]| vs::covariance(beta, &s_cov, x));
    let (s_lp, m_lp) = (s.clone(), m.clone());
    let lp = Arc::new(move |x: &[f64]| log_density(beta, &s_lp, &m_lp, x));
    let drift = Arc::new(move |x: &[f64]| {
        let dlogp = vs::tangent_dlogp(beta, e, &s, &m, x);
        vs::drift(beta, &s, x, &dlogp)
    });
    let exchangeable = params.alpha.iter().all(|&a| a == params.alpha[0])
        && params.sigma.iter().all(|&v| v == params.sigma[0]);
    Ok(ModelSpec::new(DomainKind::Simplex(d), cov, lp)?
        .with_analytic_drift(drift)
        .exchangeable(exchangeable)
        .with_family(ModelFamily::NameBased(params)))
}
