//! Rank identifying functions and cell labels.

use std::fmt;

use crate::error::{Error, Result};

/// A permutation `τ` labelling the open cell `{x : x_τ(1) > x_τ(2) > … > x_τ(d)}`.
///
/// Stored zero-based; [`fmt::Display`] prints the one-based digit string used in
/// CSV output (e.g. `"231"`), with entries above 9 separated by dashes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellLabel {
    perm: Vec<usize>,
}

impl CellLabel {
    /// Builds a label from a zero-based permutation.
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &p in &perm {
            if p >= d || seen[p] {
                return Err(Error::InvalidState(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    /// Builds a label from one-based entries.
    pub fn from_one_based(perm: &[usize]) -> Result<Self> {
        if perm.contains(&0) {
            return Err(Error::InvalidState("one-based permutation contains 0".into()));
        }
        Self::new(perm.iter().map(|p| p - 1).collect())
    }

    pub(crate) fn from_raw(perm: Vec<usize>) -> Self {
        Self { perm }
    }

    pub fn identity(d: usize) -> Self {
        Self { perm: (0..d).collect() }
    }

    /// Name (zero-based) occupying rank `k` (zero-based).
    pub fn name_at(&self, k: usize) -> usize {
        self.perm[k]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Inverse permutation: `ranks()[i]` is the zero-based rank of name `i`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut inv = vec![0; self.perm.len()];
        for (k, &i) in self.perm.iter().enumerate() {
            inv[i] = k;
        }
        inv
    }

    /// Parses the one-based digit string produced by `Display`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<usize> = if s.contains('-') {
            s.split('-')
                .map(|p| p.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidState(format!("bad cell label {s:?}: {e}")))?
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|v| v as usize))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::InvalidState(format!("bad cell label {s:?}")))?
        };
        Self::from_one_based(&parts)
    }

    /// All `d!` permutations in lexicographic order.
    pub fn all(d: usize) -> Vec<CellLabel> {
        let mut out = Vec::new();
        let mut perm: Vec<usize> = (0..d).collect();
        loop {
            out.push(CellLabel { perm: perm.clone() });
            if !next_permutation(&mut perm) {
                break;
            }
        }
        out
    }
}

impl fmt::Display for CellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wide = self.perm.len() > 9;
        for (k, p) in self.perm.iter().enumerate() {
            if wide && k > 0 {
                f.write_str("-")?;
            }
            write!(f, "{}", p + 1)?;
        }
        Ok(())
    }
}

/// Advances `perm` to the next lexicographic permutation; false when it wraps.
pub(crate) fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        perm.reverse();
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Descending rearrangement of a point together with its rank identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct RankView {
    /// `x_(1) ≥ x_(2) ≥ … ≥ x_(d)`.
    pub ranked: Vec<f64>,
    /// `rank_ids[k] = r_{k+1}(x)`, zero-based names.
    pub rank_ids: Vec<usize>,
    /// True when two adjacent ranked values are exactly equal.
    pub tie: bool,
}

impl RankView {
    pub fn cell(&self) -> CellLabel {
        CellLabel::from_raw(self.rank_ids.clone())
    }

    /// One-based rank identifiers.
    pub fn rank_ids_one_based(&self) -> Vec<usize> {
        self.rank_ids.iter().map(|i| i + 1).collect()
    }
}

/// Sorts `x` in descending order; equal values keep increasing index order.
pub fn rank_view(x: &[f64]) -> Result<RankView> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidState(format!("coordinate {i} is not finite ({})", x[i])));
    }
    let mut rank_ids: Vec<usize> = (0..x.len()).collect();
    // stable sort keeps the lexicographic tie rule
    rank_ids.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).expect("finite"));
    let ranked: Vec<f64> = rank_ids.iter().map(|&i| x[i]).collect();
    let tie = ranked.windows(2).any(|w| w[0] == w[1]);
    Ok(RankView { ranked, rank_ids, tie })
}

/// Cell membership of a point; exact ties are resolved by the index rule and flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAssignment {
    pub label: CellLabel,
    pub boundary: bool,
}

pub fn cell_of(x: &[f64]) -> Result<CellAssignment> {
    let view = rank_view(x)?;
    Ok(CellAssignment { boundary: view.tie, label: view.cell() })
}
