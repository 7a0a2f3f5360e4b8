use crate::error::{Error, Result};

/// Histogram on `[0, upper)` with an overflow bin for larger values.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub overflow: usize,
    pub total: usize,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize, upper: f64) -> Result<Self> {
        if bins == 0 || !(upper > 0.0) {
            return Err(Error::InvalidParameters("histogram needs bins >= 1 and a positive range".into()));
        }
        if values.is_empty() {
            return Err(Error::EmptyPath);
        }
        let w = upper / bins as f64;
        let edges = (0..=bins).map(|b| b as f64 * w).collect();
        let mut counts = vec![0; bins];
        let mut overflow = 0;
        for &v in values {
            let b = (v.max(0.0) / w) as usize;
            if b < bins {
                counts[b] += 1;
            } else {
                overflow += 1;
            }
        }
        Ok(Self { edges, counts, overflow, total: values.len() })
    }

    /// Empirical density of each bin.
    pub fn density(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, e)| c as f64 / self.total as f64 / (e[1] - e[0]))
            .collect()
    }

    /// Total-variation distance to the law with distribution function `cdf`
    /// on `[0, ∞)`, over the bins plus the overflow bin.
    pub fn total_variation<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.total as f64;
        let mut tv = 0.0;
        for (c, e) in self.counts.iter().zip(self.edges.windows(2)) {
            tv += (*c as f64 / n - (cdf(e[1]) - cdf(e[0]))).abs();
        }
        let upper = *self.edges.last().expect("edges");
        tv += (self.overflow as f64 / n - (1.0 - cdf(upper))).abs();
        tv += cdf(0.0).abs();
        0.5 * tv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_law_has_small_distance() {
        // quantiles of Exp(1)
        let n = 10_000;
        let v: Vec<f64> = (0..n).map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln()).collect();
        let h = Histogram::new(&v, 50, 5.0).unwrap();
        let tv = h.total_variation(|x| 1.0 - (-x).exp());
        assert!(tv < 1e-3, "{tv}");
        assert_eq!(h.counts.iter().sum::<usize>() + h.overflow, n);
    }

    #[test]
    fn disjoint_laws_have_distance_one() {
        let h = Histogram::new(&[10.0, 11.0], 4, 1.0).unwrap();
        assert!((h.total_variation(|x| x.min(1.0)) - 1.0).abs() < 1e-15);
    }
}
