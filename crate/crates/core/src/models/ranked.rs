use crate::error::{Error, Result};
use crate::model::{next_permutation, ModelSpec};

/// Largest dimension for which the `d!`-term sum is evaluated directly.
pub const MAX_EXACT_DIM: usize = 10;

/// Unnormalised density of the ranked process at `y` (non-increasing):
/// `q(y) = Σ_τ p(x)` with `x_τ(k) = y_k`.
pub fn ranked_density_q(spec: &ModelSpec, y: &[f64]) -> Result<f64> {
    let d = spec.dim();
    if y.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: y.len() });
    }
    if d > MAX_EXACT_DIM {
        return Err(Error::UseMonteCarlo(d));
    }
    if y.windows(2).any(|w| !(w[0] >= w[1])) {
        return Err(Error::InvalidState("ranked point must be non-increasing".into()));
    }
    if !spec.domain().contains(y) {
        return Err(Error::InvalidState(format!("{y:?} is outside the domain")));
    }
    let mut perm: Vec<usize> = (0..d).collect();
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    loop {
        for k in 0..d {
            x[perm[k]] = y[k];
        }
        total += spec.density(&x);
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_hybrid_atlas, make_name_based, HybridAtlasParams, NameBasedParams};

    #[test]
    fn exchangeable_is_d_factorial_times_p() {
        let spec = make_name_based(NameBasedParams { beta: 0.5, alpha: vec![0.7; 3], sigma: vec![1.0; 3] }).unwrap();
        let y = [0.5, 0.3, 0.2];
        let q = ranked_density_q(&spec, &y).unwrap();
        assert!((q / (6.0 * spec.density(&y)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hybrid_matches_closed_form() {
        let p = HybridAtlasParams { beta: 0.25, gamma: vec![0.2, -0.1, 0.3, 0.0], g: vec![-0.4, 0.1, 0.0, 0.5], sigma: 0.9 };
        let spec = make_hybrid_atlas(p.clone()).unwrap();
        let y = [0.4, 0.3, 0.2, 0.1];
        let q = ranked_density_q(&spec, &y).unwrap();
        let closed = p.ranked_log_density(&y).exp();
        assert!((q / closed - 1.0).abs() < 1e-10, "{q} vs {closed}");
    }

    #[test]
    fn large_dimension_defers_to_monte_carlo() {
        let d = 11;
        let spec = make_name_based(NameBasedParams { beta: 0.5, alpha: vec![1.0; d], sigma: vec![1.0; d] }).unwrap();
        let y: Vec<f64> = (0..d).map(|k| (d - k) as f64).collect();
        let s: f64 = y.iter().sum();
        let y: Vec<f64> = y.into_iter().map(|v| v / s).collect();
        assert_eq!(ranked_density_q(&spec, &y), Err(Error::UseMonteCarlo(11)));
    }

    #[test]
    fn unsorted_input_rejected() {
        let spec = make_name_based(NameBasedParams { beta: 0.5, alpha: vec![1.0; 2], sigma: vec![1.0; 2] }).unwrap();
        assert!(ranked_density_q(&spec, &[0.3, 0.7]).is_err());
    }
}
