//! Monte Carlo integration over the simplex.
//!
//! Integrals are reported against the uniform probability measure on the
//! simplex, i.e. `∫ f = E[f(U)]` with `U` uniform, so `∫ 1 = 1`. Multiply by
//! [`chart_volume`] to obtain the Lebesgue integral over the chart
//! `(x_1, …, x_{d−1})`; for `d = 2` the two conventions coincide.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{CellLabel, ModelSpec};
use crate::sim::path_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub std_error: f64,
    /// Samples that entered the estimate.
    pub n_samples: usize,
    /// Samples dropped because the integrand was not finite.
    pub skipped: usize,
}

/// Lebesgue volume of the chart of the `(d−1)`-simplex, `1/(d−1)!`.
pub fn chart_volume(d: usize) -> f64 {
    1.0 / (1..d).map(|k| k as f64).product::<f64>()
}

/// One uniform point of the open simplex (normalised standard exponentials).
pub fn uniform_simplex_point<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let e: Vec<f64> = (0..d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let s: f64 = e.iter().sum();
        let x: Vec<f64> = e.into_iter().map(|v| v / s).collect();
        if x.iter().all(|&v| v > 0.0) {
            return x;
        }
    }
}

/// `n` i.i.d. uniform points of the open simplex.
pub fn simplex_sample<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n).map(|_| uniform_simplex_point(rng, d)).collect()
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: usize,
    skipped: usize,
    sum: f64,
    sum2: f64,
}

impl Moments {
    fn add(&mut self, v: f64) {
        if v.is_finite() {
            self.n += 1;
            self.sum += v;
            self.sum2 += v * v;
        } else {
            self.skipped += 1;
        }
    }

    fn merge(mut self, o: Moments) -> Self {
        self.n += o.n;
        self.skipped += o.skipped;
        self.sum += o.sum;
        self.sum2 += o.sum2;
        self
    }

    fn result(&self, scale: f64) -> Result<QuadratureResult> {
        if self.n == 0 {
            return Err(Error::Numeric("integrand was not finite at any sample".into()));
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 { ((self.sum2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        Ok(QuadratureResult {
            value: mean * scale,
            std_error: (var / n).sqrt() * scale,
            n_samples: self.n,
            skipped: self.skipped,
        })
    }
}

/// Plain Monte Carlo estimate of `∫ f` (uniform probability convention).
pub fn integrate_simplex<F, R>(f: F, d: usize, n: usize, rng: &mut R) -> Result<QuadratureResult>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let mut m = Moments::default();
    for _ in 0..n {
        m.add(f(&uniform_simplex_point(rng, d)));
    }
    m.result(1.0)
}

const CHUNK: usize = 4096;

/// Same estimator with samples drawn in fixed chunks on substreams of `seed`;
/// the result does not depend on `exec`.
pub fn integrate_simplex_seeded<F>(f: F, d: usize, n: usize, seed: u64, exec: Execution) -> Result<QuadratureResult>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let parts = exec.map(chunks, |c| {
        let mut rng = path_rng(seed, c as u64);
        let mut m = Moments::default();
        for _ in 0..CHUNK.min(n - c * CHUNK) {
            m.add(f(&uniform_simplex_point(&mut rng, d)));
        }
        m
    });
    parts.into_iter().fold(Moments::default(), Moments::merge).result(1.0)
}

fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

/// `Z = ∫ p`.
pub fn normalizing_constant<R: Rng + ?Sized>(spec: &ModelSpec, n: usize, rng: &mut R) -> Result<QuadratureResult> {
    if !spec.domain().is_simplex() {
        return Err(Error::UnsupportedDomain);
    }
    integrate_simplex(|x| spec.density(x), spec.dim(), n, rng)
}

/// `μ(E_τ) = ∫ 1_{E_τ} p`, sampling uniformly inside the cell. Exchangeable
/// specs return `Z/d!`.
pub fn mu_cell<R: Rng + ?Sized>(spec: &ModelSpec, tau: &CellLabel, n: usize, rng: &mut R) -> Result<QuadratureResult> {
    if !spec.domain().is_simplex() {
        return Err(Error::UnsupportedDomain);
    }
    let d = spec.dim();
    if tau.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: tau.len() });
    }
    let scale = 1.0 / factorial(d);
    if spec.is_exchangeable() {
        return normalizing_constant(spec, n, rng).map(|z| QuadratureResult {
            value: z.value * scale,
            std_error: z.std_error * scale,
            ..z
        });
    }
    let mut m = Moments::default();
    let mut x = vec![0.0; d];
    for _ in 0..n {
        let mut u = uniform_simplex_point(rng, d);
        u.sort_by(|a, b| b.total_cmp(a));
        for (k, v) in u.into_iter().enumerate() {
            x[tau.name_at(k)] = v;
        }
        m.add(spec.density(&x));
    }
    m.result(scale)
}
