//! Covariance and drift shared by the name-based and hybrid simplex families.
//!
//! Both use `c = Σ_k a_k (e_k − x)(e_k − x)ᵀ` with `a_k = s_k x_k^{2−2β}`.
//! For such `c` the generator drift is `b = ½ Σ_k w_k (e_k − x)`, where
//! `w_k = D_k a_k − d·a_k + a_k D_k log p` and `D_k` differentiates along the
//! tangent direction `e_k − x`.

use nalgebra::DMatrix;

/// `c_ij = −x_i x_j (s_i x_i^{1−2β} + s_j x_j^{1−2β} − Σ_k s_k x_k^{2−2β})`, `c·1 = 0`.
pub(crate) fn covariance(beta: f64, s: &[f64], x: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    let pw: Vec<f64> = x.iter().map(|&v| v.powf(1.0 - 2.0 * beta)).collect();
    let total: f64 = (0..d).map(|k| s[k] * pw[k] * x[k]).sum();
    let mut c = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            let v = -x[i] * x[j] * (s[i] * pw[i] + s[j] * pw[j] - total);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    for i in 0..d {
        let off: f64 = (0..d).filter(|&j| j != i).map(|j| c[(i, j)]).sum();
        c[(i, i)] = -off;
    }
    c
}

/// Tangent derivatives `D_k log p` of `log p = e·log N + Σ m_i log x_i`, where
/// `N = Σ x_i^{2β} / n_i`. Pass `norm_exp = 0` to drop the `N` factor.
pub(crate) fn tangent_dlogp(beta: f64, norm_exp: f64, n_scale: &[f64], m: &[f64], x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let msum: f64 = m.iter().sum();
    let norm_term = if norm_exp != 0.0 && beta != 0.0 {
        let n: f64 = (0..d).map(|i| x[i].powf(2.0 * beta) / n_scale[i]).sum();
        Some((n, norm_exp * 2.0 * beta))
    } else {
        None
    };
    (0..d)
        .map(|k| {
            let mut v = m[k] / x[k] - msum;
            if let Some((n, e2b)) = norm_term {
                v += e2b * (x[k].powf(2.0 * beta - 1.0) / n_scale[k] - n) / n;
            }
            v
        })
        .collect()
}

/// `b = ½ Σ_k w_k (e_k − x)`.
pub(crate) fn drift(beta: f64, s: &[f64], x: &[f64], dlogp: &[f64]) -> Vec<f64> {
    let d = x.len();
    let w: Vec<f64> = (0..d)
        .map(|k| {
            let a = s[k] * x[k].powf(2.0 - 2.0 * beta);
            let da = s[k] * (2.0 - 2.0 * beta) * x[k].powf(1.0 - 2.0 * beta) * (1.0 - x[k]);
            da - d as f64 * a + a * dlogp[k]
        })
        .collect();
    let wsum: f64 = w.iter().sum();
    (0..d).map(|i| 0.5 * (w[i] - x[i] * wsum)).collect()
}

/// Market-weight drift induced by `d log S_i = φ_i X_i^{−2β} dt + σ_i X_i^{−β} dW_i`.
///
/// Equals the generator drift only for special parameter choices (β = ½ with
/// equal `s_i`, or β = 0 with `Σ φ_i = 0`); kept as a reference.
pub fn market_weight_drift(beta: f64, s: &[f64], phi: &[f64], x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let common: f64 = (0..d)
        .map(|j| -(phi[j] + 0.5 * s[j]) * x[j].powf(1.0 - 2.0 * beta) + s[j] * x[j].powf(2.0 - 2.0 * beta))
        .sum();
    (0..d)
        .map(|i| {
            x[i] * ((phi[i] + 0.5 * s[i]) * x[i].powf(-2.0 * beta) - s[i] * x[i].powf(1.0 - 2.0 * beta) + common)
        })
        .collect()
}

/// Exponent `2(1 + (d−1)β) − d` of the norm factor.
pub(crate) fn norm_exponent(d: usize, beta: f64) -> f64 {
    2.0 * (1.0 + (d as f64 - 1.0) * beta) - d as f64
}
