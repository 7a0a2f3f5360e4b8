use super::RankedPath;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionRung {
    pub eps: f64,
    /// Fraction of samples with `min_k G_k < ε`.
    pub pair_fraction: f64,
    /// Fraction of samples with `max(G_k, G_{k+1}) < ε` for some `k`.
    pub triple_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionReport {
    pub ladder: Vec<CollisionRung>,
    /// Samples with two exactly equal coordinates.
    pub exact_ties: usize,
    pub samples: usize,
}

/// Proximity fractions along a decreasing `ε` ladder.
pub fn collision_stats(rp: &RankedPath, eps_list: &[f64]) -> Result<CollisionReport> {
    if rp.is_empty() {
        return Err(Error::EmptyPath);
    }
    if eps_list.iter().any(|&e| !(e > 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameters("eps ladder must be positive and strictly decreasing".into()));
    }
    let n = rp.len();
    let mut pair = vec![0usize; eps_list.len()];
    let mut triple = vec![0usize; eps_list.len()];
    let mut ties = 0;
    for m in 0..n {
        let g = rp.gaps(m);
        let min_gap = g.iter().copied().fold(f64::INFINITY, f64::min);
        let min_pair_max = g.windows(2).map(|w| w[0].max(w[1])).fold(f64::INFINITY, f64::min);
        for (j, &e) in eps_list.iter().enumerate() {
            pair[j] += (min_gap < e) as usize;
            triple[j] += (min_pair_max < e) as usize;
        }
        ties += rp.is_tie(m) as usize;
    }
    let ladder = eps_list
        .iter()
        .enumerate()
        .map(|(j, &eps)| CollisionRung {
            eps,
            pair_fraction: pair[j] as f64 / n as f64,
            triple_fraction: triple[j] as f64 / n as f64,
        })
        .collect();
    Ok(CollisionReport { ladder, exact_ties: ties, samples: n })
}
