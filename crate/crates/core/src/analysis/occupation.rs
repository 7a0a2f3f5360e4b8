use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{ErgodicAverage, RankedPath, BATCHES};
#[cfg(doc)]
use super::ergodic_average;
use crate::error::{Error, Result};
use crate::model::CellLabel;

#[derive(Debug, Clone, PartialEq)]
pub struct OccupationReport {
    /// Fraction of samples in each cell; for `d <= 7` every cell is listed.
    pub theta_tau: BTreeMap<CellLabel, ErgodicAverage>,
    /// `theta_ki[(k, i)]`: fraction of samples with name `i` at rank `k` (zero-based).
    pub theta_ki: DMatrix<f64>,
    pub ergodic_averages: BTreeMap<String, ErgodicAverage>,
    pub reference_values: BTreeMap<String, f64>,
}

/// Empirical occupation fractions, each sample weighted equally. Standard
/// errors use the same 16 batch means as [`ergodic_average`].
pub fn occupation_times(rp: &RankedPath) -> Result<OccupationReport> {
    if rp.is_empty() {
        return Err(Error::EmptyPath);
    }
    let d = rp.dim();
    let n = rp.len();
    let bsize = n / BATCHES;
    let mut counts: BTreeMap<CellLabel, (usize, [usize; BATCHES])> = BTreeMap::new();
    if d <= 7 {
        for c in CellLabel::all(d) {
            counts.insert(c, (0, [0; BATCHES]));
        }
    }
    let mut theta_ki = DMatrix::zeros(d, d);
    for m in 0..n {
        for (k, &i) in rp.rank_ids(m).iter().enumerate() {
            theta_ki[(k, i)] += 1.0;
        }
        let e = counts.entry(rp.cell(m)).or_insert((0, [0; BATCHES]));
        e.0 += 1;
        if bsize > 0 && m / bsize < BATCHES {
            e.1[m / bsize] += 1;
        }
    }
    theta_ki /= n as f64;
    let theta_tau = counts
        .into_iter()
        .map(|(c, (total, batches))| {
            let mean = total as f64 / n as f64;
            let std_error = if bsize == 0 {
                f64::NAN
            } else {
                let bm: Vec<f64> = batches.iter().map(|&v| v as f64 / bsize as f64).collect();
                let avg = bm.iter().sum::<f64>() / BATCHES as f64;
                let var = bm.iter().map(|v| (v - avg) * (v - avg)).sum::<f64>() / (BATCHES as f64 - 1.0);
                (var / BATCHES as f64).sqrt()
            };
            (c, ErgodicAverage { mean, std_error })
        })
        .collect();
    Ok(OccupationReport {
        theta_tau,
        theta_ki,
        ergodic_averages: BTreeMap::new(),
        reference_values: BTreeMap::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ranked_path;
    use crate::sim::PathSample;

    #[test]
    fn single_cell_path() {
        let p = PathSample::from_parts(3, vec![0.0, 1.0], vec![0.2, 0.5, 0.3, 0.25, 0.45, 0.3]);
        let r = occupation_times(&ranked_path(&p).unwrap()).unwrap();
        assert_eq!(r.theta_tau.len(), 6);
        assert_eq!(r.theta_tau[&CellLabel::parse("231").unwrap()].mean, 1.0);
        let want = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(r.theta_ki, want);
    }

    #[test]
    fn rank_occupancy_is_cell_marginal() {
        let states = vec![0.2, 0.5, 0.3, 0.6, 0.1, 0.3, 0.1, 0.2, 0.7, 0.3, 0.4, 0.3];
        let p = PathSample::from_parts(3, vec![0.0, 1.0, 2.0, 3.0], states);
        let r = occupation_times(&ranked_path(&p).unwrap()).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                let s: f64 = r.theta_tau.iter().filter(|(c, _)| c.name_at(k) == i).map(|(_, v)| v.mean).sum();
                assert!((s - r.theta_ki[(k, i)]).abs() < 1e-15);
            }
            assert!((r.theta_ki.row(k).sum() - 1.0).abs() < 1e-12);
            assert!((r.theta_ki.column(k).sum() - 1.0).abs() < 1e-12);
        }
        let total: f64 = r.theta_tau.values().map(|v| v.mean).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
