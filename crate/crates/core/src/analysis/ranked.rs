use crate::error::{Error, Result};
use crate::model::{rank_view, CellLabel};
use crate::sim::PathSample;

/// Ranked view of every recorded state of a path, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPath {
    dim: usize,
    times: Vec<f64>,
    ranked: Vec<f64>,
    rank_ids: Vec<usize>,
    ties: Vec<bool>,
}

pub fn ranked_path(path: &PathSample) -> Result<RankedPath> {
    if path.is_empty() {
        return Err(Error::EmptyPath);
    }
    let d = path.dim();
    let n = path.len();
    let mut rp = RankedPath {
        dim: d,
        times: path.times().to_vec(),
        ranked: Vec::with_capacity(n * d),
        rank_ids: Vec::with_capacity(n * d),
        ties: Vec::with_capacity(n),
    };
    for x in path.iter_states() {
        let v = rank_view(x)?;
        rp.ranked.extend_from_slice(&v.ranked);
        rp.rank_ids.extend_from_slice(&v.rank_ids);
        rp.ties.push(v.tie);
    }
    Ok(rp)
}

impl RankedPath {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `x_()` at sample `m`.
    pub fn ranked(&self, m: usize) -> &[f64] {
        &self.ranked[m * self.dim..(m + 1) * self.dim]
    }

    /// Zero-based `r_1..r_d` at sample `m`.
    pub fn rank_ids(&self, m: usize) -> &[usize] {
        &self.rank_ids[m * self.dim..(m + 1) * self.dim]
    }

    pub fn cell(&self, m: usize) -> CellLabel {
        CellLabel::from_raw(self.rank_ids(m).to_vec())
    }

    /// `G_k = x_(k) − x_(k+1)` at sample `m`, `k` one-based.
    pub fn gap(&self, m: usize, k: usize) -> f64 {
        let r = self.ranked(m);
        r[k - 1] - r[k]
    }

    /// All gaps at sample `m`.
    pub fn gaps(&self, m: usize) -> Vec<f64> {
        self.ranked(m).windows(2).map(|w| w[0] - w[1]).collect()
    }

    /// Series of gap `k` (one-based).
    pub fn gap_series(&self, k: usize) -> Result<Vec<f64>> {
        self.check_gap_index(k)?;
        Ok((0..self.len()).map(|m| self.gap(m, k)).collect())
    }

    /// True when sample `m` sits on a cell wall.
    pub fn is_tie(&self, m: usize) -> bool {
        self.ties[m]
    }

    /// Value at sample `m` of the coordinate owned by name `i`.
    pub fn coordinate(&self, m: usize, i: usize) -> f64 {
        let ids = self.rank_ids(m);
        let k = ids.iter().position(|&n| n == i).expect("name in range");
        self.ranked(m)[k]
    }

    pub(crate) fn check_gap_index(&self, k: usize) -> Result<()> {
        if k == 0 || k >= self.dim {
            return Err(Error::RankOutOfRange { k, max: self.dim - 1 });
        }
        Ok(())
    }
}
