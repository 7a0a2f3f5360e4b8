use crate::error::{Error, Result};

pub const BATCHES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicAverage {
    pub mean: f64,
    /// Batch-means standard error.
    pub std_error: f64,
}

/// Time average of a uniformly sampled series with a 16-batch standard error.
pub fn ergodic_average(values: &[f64]) -> Result<ErgodicAverage> {
    if values.is_empty() {
        return Err(Error::EmptyPath);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let b = n / BATCHES;
    if b == 0 {
        return Ok(ErgodicAverage { mean, std_error: f64::NAN });
    }
    let means: Vec<f64> = values.chunks_exact(b).take(BATCHES).map(|c| c.iter().sum::<f64>() / b as f64).collect();
    let bm = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|m| (m - bm) * (m - bm)).sum::<f64>() / (BATCHES as f64 - 1.0);
    Ok(ErgodicAverage { mean, std_error: (var / BATCHES as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series() {
        let e = ergodic_average(&[1.0; 1000]).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn short_series_has_undefined_error() {
        let e = ergodic_average(&[1.0, 3.0]).unwrap();
        assert_eq!(e.mean, 2.0);
        assert!(e.std_error.is_nan());
    }
}
