//! Euler–Maruyama simulation with simplex preservation and explosion detection.

mod ensemble;
mod path;
mod step;

pub use ensemble::{path_rng, simulate_ensemble, EnsembleResult};
pub use path::{PathSample, Termination};
pub use step::{step, Stepper};

use crate::error::{Error, Result};
use crate::model::{DomainKind, ModelSpec, StatePoint};

/// What to do when a proposal leaves the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryPolicy {
    /// Split the step into dyadic sub-steps with fresh noise.
    #[default]
    HalveStep,
    /// Redraw the noise at the full step size.
    RejectResample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    /// Total simulated time, burn-in included.
    pub horizon: f64,
    pub burn_in: f64,
    pub seed: u64,
    pub boundary_policy: BoundaryPolicy,
    pub max_halvings: u32,
    /// Record every `thinning`-th step.
    pub thinning: usize,
    /// Simplex: smallest admissible coordinate. FullSpace: largest admissible norm.
    /// `None` selects 1e-12 and 1e9 respectively.
    pub explosion_guard: Option<f64>,
    /// Permit specs tagged non-conforming.
    pub allow_non_conforming: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 1.0,
            burn_in: 0.0,
            seed: 0,
            boundary_policy: BoundaryPolicy::HalveStep,
            max_halvings: 40,
            thinning: 1,
            explosion_guard: None,
            allow_non_conforming: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameters(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.burn_in >= 0.0 && self.horizon > self.burn_in && self.horizon.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "need horizon > burn_in >= 0, got horizon = {}, burn_in = {}",
                self.horizon, self.burn_in
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidParameters("thinning must be >= 1".into()));
        }
        if let Some(g) = self.explosion_guard {
            if !(g > 0.0) {
                return Err(Error::InvalidParameters(format!("explosion_guard must be positive, got {g}")));
            }
        }
        Ok(())
    }

    pub fn guard(&self, domain: DomainKind) -> f64 {
        self.explosion_guard.unwrap_or(match domain {
            DomainKind::Simplex(_) => 1e-12,
            DomainKind::FullSpace(_) => 1e9,
        })
    }

    pub fn total_steps(&self) -> u64 {
        (self.horizon / self.dt).round() as u64
    }

    pub fn burn_steps(&self) -> u64 {
        (self.burn_in / self.dt).round() as u64
    }

    /// Number of recorded states of a completed run.
    pub fn recorded_len(&self) -> usize {
        ((self.total_steps() - self.burn_steps()) / self.thinning as u64) as usize + 1
    }
}

/// Simulates one path on substream 0 of `config.seed`.
pub fn simulate(spec: &ModelSpec, x0: &StatePoint, config: &SimConfig) -> Result<PathSample> {
    simulate_stream(spec, x0, config, 0)
}

pub(crate) fn simulate_stream(spec: &ModelSpec, x0: &StatePoint, config: &SimConfig, stream: u64) -> Result<PathSample> {
    config.validate()?;
    if !spec.is_conforming() && !config.allow_non_conforming {
        return Err(Error::AssumptionViolation(
            "spec is non-conforming (c p is not continuous across cells); set allow_non_conforming to simulate it".into(),
        ));
    }
    if x0.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: x0.len() });
    }
    let domain = spec.domain();
    let guard = config.guard(domain);
    let mut rng = path_rng(config.seed, stream);
    let mut stepper = Stepper::new(spec, config);
    let (n_total, n_burn) = (config.total_steps(), config.burn_steps());
    let thin = config.thinning as u64;
    let mut path = PathSample::with_capacity(spec.dim(), config.recorded_len());
    let mut x = x0.to_vec();
    if n_burn == 0 {
        path.push(0.0, &x);
    }
    for n in 1..=n_total {
        let t = n as f64 * config.dt;
        match stepper.advance(&x, &mut rng) {
            Ok(y) => x = y,
            Err(Error::BoundaryExhausted(k)) => {
                path.push(t, &x);
                path.terminate(t, format!("boundary policy exhausted after {k} attempts"));
                break;
            }
            Err(e) => return Err(e),
        }
        if let Some(reason) = exploded(domain, &x, guard) {
            path.push(t, &x);
            path.terminate(t, reason);
            break;
        }
        if n >= n_burn && (n - n_burn) % thin == 0 {
            path.push(t, &x);
        }
    }
    path.halvings = stepper.halvings;
    path.rejections = stepper.rejections;
    path.rng_fingerprint = fingerprint(&rng, stream);
    Ok(path)
}

fn exploded(domain: DomainKind, x: &[f64], guard: f64) -> Option<String> {
    match domain {
        DomainKind::Simplex(_) => {
            let m = x.iter().copied().fold(f64::INFINITY, f64::min);
            (m < guard).then(|| format!("coordinate fell below {guard:e} (min {m:e})"))
        }
        DomainKind::FullSpace(_) => {
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            (!(n <= guard)).then(|| format!("norm exceeded {guard:e} ({n:e})"))
        }
    }
}

fn fingerprint(rng: &rand_chacha::ChaCha8Rng, stream: u64) -> u64 {
    let pos = rng.get_word_pos();
    (pos as u64) ^ ((pos >> 64) as u64) ^ stream.rotate_left(32)
}
