//! Discrete local-time estimators for the rank gaps.

use super::RankedPath;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalTimeMethod {
    Tanaka,
    /// Occupation density in a band of width `eps` above zero.
    Occupation { eps: f64 },
}

impl LocalTimeMethod {
    /// Occupation estimator with the default bandwidth `dt^0.4`.
    pub fn occupation_default(dt: f64) -> Self {
        LocalTimeMethod::Occupation { eps: dt.powf(0.4) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeEstimate {
    /// One-based rank index of the gap `x_(k) − x_(k+1)`.
    pub k: usize,
    pub method: LocalTimeMethod,
    /// Estimate at every sample time; starts at 0 and never decreases.
    pub values: Vec<f64>,
}

/// `1_{x>0} − 1_{x≤0}`.
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn running_max(mut v: Vec<f64>) -> Vec<f64> {
    let mut m = f64::NEG_INFINITY;
    for x in v.iter_mut() {
        m = m.max(*x);
        *x = m;
    }
    v
}

/// Local time at zero of the gap `G_k`, in the normalisation where
/// `dX_(k) = Σ_i 1{r_k = i} dX_i + ¼ dL_k − ¼ dL_{k−1}`.
///
/// The Tanaka form follows the pair holding ranks `k, k+1` at `t_m` to `t_{m+1}`:
/// with `Y = X_{r_k} − X_{r_{k+1}}` the increment is
/// `2(|Y'| − |Y| − sign(Y)(Y' − Y))`. The occupation form is
/// `(1/ε) Σ 1{G_k < ε} (ΔY)²`, squaring the increment of the same tracked pair
/// (the increment of `G_k` itself loses variation whenever the pair swaps).
pub fn local_time_gap(rp: &RankedPath, k: usize, method: LocalTimeMethod) -> Result<LocalTimeEstimate> {
    rp.check_gap_index(k)?;
    let n = rp.len();
    let mut values = Vec::with_capacity(n);
    let mut acc = 0.0;
    values.push(0.0);
    match method {
        LocalTimeMethod::Tanaka => {
            for m in 0..n - 1 {
                let ids = rp.rank_ids(m);
                let (i, j) = (ids[k - 1], ids[k]);
                let y = rp.gap(m, k);
                let y1 = rp.coordinate(m + 1, i) - rp.coordinate(m + 1, j);
                acc += 2.0 * (y1.abs() - y.abs() - sign(y) * (y1 - y));
                values.push(acc);
            }
        }
        LocalTimeMethod::Occupation { eps } => {
            if !(eps > 0.0) {
                return Err(Error::InvalidParameters(format!("bandwidth must be positive, got {eps}")));
            }
            for m in 0..n - 1 {
                let g = rp.gap(m, k);
                if g < eps {
                    let ids = rp.rank_ids(m);
                    let (i, j) = (ids[k - 1], ids[k]);
                    let dy = rp.coordinate(m + 1, i) - rp.coordinate(m + 1, j) - g;
                    acc += dy * dy / eps;
                }
                values.push(acc);
            }
        }
    }
    Ok(LocalTimeEstimate { k, method, values: running_max(values) })
}

/// Tanaka sum `|Y_n| − |Y_0| − Σ sign(Y_m) ΔY_m` for a scalar series.
pub fn tanaka_local_time(y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut stoch = 0.0;
    for (m, &v) in y.iter().enumerate() {
        if m > 0 {
            stoch += sign(y[m - 1]) * (v - y[m - 1]);
        }
        out.push(v.abs() - y[0].abs() - stoch);
    }
    running_max(out)
}

/// Occupation estimate `(1/(2ε)) Σ 1{|Y_m| < ε} (ΔY_m)²` for a scalar series.
pub fn occupation_local_time(y: &[f64], eps: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in y.windows(2) {
        if w[0].abs() < eps {
            acc += (w[1] - w[0]) * (w[1] - w[0]) / (2.0 * eps);
        }
        out.push(acc);
    }
    out
}
