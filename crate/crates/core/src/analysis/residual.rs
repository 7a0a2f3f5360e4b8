use super::{local_time_gap, LocalTimeMethod, RankedPath};
use crate::error::{Error, Result};
use crate::sim::PathSample;

/// Residuals of the ranked-dynamics identity
/// `X_(k)(t) − X_(k)(0) = Σ_m Σ_i 1{r_k(t_m) = i} ΔX_i + ¼L_k(t) − ¼L_{k−1}(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// `series[k−1][n]` is the residual of rank `k` at sample `n`.
    pub series: Vec<Vec<f64>>,
    /// `max_n |residual_k(t_n)|` for each `k`.
    pub max_abs: Vec<f64>,
    /// `max_n |Σ_k residual_k(t_n)|`.
    pub telescoped_max: f64,
}

/// Uses Tanaka local-time estimates, with `L_0 = L_d = 0`.
pub fn rank_dynamics_residual(path: &PathSample, rp: &RankedPath) -> Result<ResidualReport> {
    if path.len() != rp.len() || path.dim() != rp.dim() {
        return Err(Error::DimensionMismatch { expected: path.len(), got: rp.len() });
    }
    let d = rp.dim();
    let n = rp.len();
    let lt: Vec<Vec<f64>> = (1..d)
        .map(|k| local_time_gap(rp, k, LocalTimeMethod::Tanaka).map(|e| e.values))
        .collect::<Result<_>>()?;
    let local = |k: usize, m: usize| if k == 0 || k == d { 0.0 } else { lt[k - 1][m] };

    let mut series = vec![Vec::with_capacity(n); d];
    let mut indicator_sum = vec![0.0; d];
    let y0 = rp.ranked(0).to_vec();
    for m in 0..n {
        if m > 0 {
            let (prev, cur) = (path.state(m - 1), path.state(m));
            for (k, &i) in rp.rank_ids(m - 1).iter().enumerate() {
                indicator_sum[k] += cur[i] - prev[i];
            }
        }
        let y = rp.ranked(m);
        for k in 0..d {
            let r = y[k] - y0[k] - indicator_sum[k] - 0.25 * local(k + 1, m) + 0.25 * local(k, m);
            series[k].push(r);
        }
    }
    let max_abs = series.iter().map(|s| s.iter().fold(0.0f64, |a, v| a.max(v.abs()))).collect();
    let telescoped_max = (0..n)
        .map(|m| series.iter().map(|s| s[m]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    Ok(ResidualReport { series, max_abs, telescoped_max })
}
