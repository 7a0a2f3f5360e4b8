use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{simulate_stream, PathSample, SimConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{ModelSpec, StatePoint};

/// Generator for path `index` of a run seeded with `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Per-path outcomes in path-index order; failures do not abort siblings.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub paths: Vec<Result<PathSample>>,
}

impl EnsembleResult {
    pub fn completed(&self) -> impl Iterator<Item = &PathSample> {
        self.paths.iter().filter_map(|p| p.as_ref().ok())
    }

    /// `(path index, error)` for every failed path.
    pub fn failures(&self) -> Vec<(usize, &Error)> {
        self.paths.iter().enumerate().filter_map(|(i, p)| p.as_ref().err().map(|e| (i, e))).collect()
    }
}

/// Simulates `n_paths` independent paths; path `i` uses substream `i`, so the
/// output does not depend on `exec` or on the thread count.
pub fn simulate_ensemble(
    spec: &ModelSpec,
    x0: &StatePoint,
    config: &SimConfig,
    n_paths: usize,
    exec: Execution,
) -> Result<EnsembleResult> {
    if n_paths == 0 {
        return Err(Error::InvalidParameters("n_paths must be >= 1".into()));
    }
    config.validate()?;
    let paths = exec.map(n_paths, |i| simulate_stream(spec, x0, config, i as u64));
    Ok(EnsembleResult { paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_atlas;
    use crate::sim::simulate;

    #[test]
    fn single_path_matches_simulate() {
        let spec = make_atlas(3, 0.5, 1.0).unwrap();
        let x0 = StatePoint::center(spec.domain());
        let c = SimConfig { dt: 1e-3, horizon: 1.0, seed: 11, ..Default::default() };
        let e = simulate_ensemble(&spec, &x0, &c, 1, Execution::Parallel).unwrap();
        assert_eq!(e.paths[0].as_ref().unwrap(), &simulate(&spec, &x0, &c).unwrap());
    }

    #[test]
    fn parallel_equals_sequential() {
        let spec = make_atlas(3, 0.5, 1.0).unwrap();
        let x0 = StatePoint::center(spec.domain());
        let c = SimConfig { dt: 1e-3, horizon: 0.5, seed: 5, ..Default::default() };
        let a = simulate_ensemble(&spec, &x0, &c, 8, Execution::Parallel).unwrap();
        let b = simulate_ensemble(&spec, &x0, &c, 8, Execution::Sequential).unwrap();
        assert_eq!(a.paths, b.paths);
        let fps: std::collections::HashSet<_> = a.completed().map(|p| p.states().to_vec().len()).collect();
        assert_eq!(fps.len(), 1);
        assert_ne!(a.paths[0].as_ref().unwrap().states(), a.paths[1].as_ref().unwrap().states());
    }
}
