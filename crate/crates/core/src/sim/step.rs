use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{BoundaryPolicy, SimConfig};
use crate::error::{Error, Result};
use crate::model::{diffusion_root, drift, rank_view, CellLabel, ModelSpec};

/// Euler–Maruyama proposal `x + b dt + root √dt ξ`, renormalised on the simplex.
/// The result may lie outside the domain.
pub fn step(spec: &ModelSpec, x: &[f64], dt: f64, noise: &[f64]) -> Result<Vec<f64>> {
    let b = drift(spec, x)?;
    let root = diffusion_root(spec, x)?;
    Ok(propose(spec, x, &b, &root, dt, noise))
}

fn propose(spec: &ModelSpec, x: &[f64], b: &[f64], root: &DMatrix<f64>, dt: f64, noise: &[f64]) -> Vec<f64> {
    let d = x.len();
    let sq = dt.sqrt();
    let mut y: Vec<f64> = (0..d)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..d {
                s += root[(i, j)] * noise[j];
            }
            x[i] + b[i] * dt + s * sq
        })
        .collect();
    if spec.domain().is_simplex() {
        let total: f64 = y.iter().sum();
        y.iter_mut().for_each(|v| *v /= total);
    }
    y
}

/// Advances a path by one nominal step, applying the boundary policy.
pub struct Stepper<'a> {
    spec: &'a ModelSpec,
    dt: f64,
    policy: BoundaryPolicy,
    max_halvings: u32,
    cache: Option<HashMap<CellLabel, DMatrix<f64>>>,
    noise: Vec<f64>,
    pub halvings: u64,
    pub rejections: u64,
    /// Total size of the sub-steps accepted in the last call to `advance`.
    pub last_consumed: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(spec: &'a ModelSpec, config: &SimConfig) -> Self {
        Self {
            spec,
            dt: config.dt,
            policy: config.boundary_policy,
            max_halvings: config.max_halvings,
            cache: spec.has_piecewise_constant_cov().then(HashMap::new),
            noise: vec![0.0; spec.dim()],
            halvings: 0,
            rejections: 0,
            last_consumed: 0.0,
        }
    }

    fn root(&mut self, x: &[f64]) -> Result<DMatrix<f64>> {
        match &mut self.cache {
            None => diffusion_root(self.spec, x),
            Some(cache) => {
                let cell = rank_view(x)?.cell();
                if let Some(r) = cache.get(&cell) {
                    return Ok(r.clone());
                }
                let r = diffusion_root(self.spec, x)?;
                cache.insert(cell, r.clone());
                Ok(r)
            }
        }
    }

    fn draw(&mut self, rng: &mut ChaCha8Rng) {
        for v in self.noise.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    }

    fn admissible(&self, y: &[f64]) -> bool {
        if self.spec.domain().is_simplex() {
            y.iter().all(|&v| v > 0.0 && v.is_finite())
        } else {
            y.iter().all(|v| v.is_finite())
        }
    }

    pub fn advance(&mut self, x: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match self.policy {
            BoundaryPolicy::HalveStep => self.advance_halving(x, rng),
            BoundaryPolicy::RejectResample => self.advance_resampling(x, rng),
        }
    }

    fn coefficients(&mut self, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        Ok((drift(self.spec, x)?, self.root(x)?))
    }

    fn advance_halving(&mut self, x: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let mut cur = x.to_vec();
        let (mut b, mut root) = self.coefficients(&cur)?;
        let mut remaining = self.dt;
        let mut h = self.dt;
        let mut level = 0u32;
        let mut consumed = 0.0;
        while remaining > 0.0 {
            h = h.min(remaining);
            self.draw(rng);
            let y = propose(self.spec, &cur, &b, &root, h, &self.noise);
            if self.admissible(&y) {
                cur = y;
                remaining -= h;
                consumed += h;
                if remaining > 0.0 {
                    (b, root) = self.coefficients(&cur)?;
                }
            } else {
                level += 1;
                self.halvings += 1;
                if level > self.max_halvings {
                    return Err(Error::BoundaryExhausted(self.max_halvings));
                }
                h *= 0.5;
            }
        }
        self.last_consumed = consumed;
        Ok(cur)
    }

    fn advance_resampling(&mut self, x: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let (b, root) = self.coefficients(x)?;
        for _ in 0..=self.max_halvings {
            self.draw(rng);
            let y = propose(self.spec, x, &b, &root, self.dt, &self.noise);
            if self.admissible(&y) {
                self.last_consumed = self.dt;
                return Ok(y);
            }
            self.rejections += 1;
        }
        Err(Error::BoundaryExhausted(self.max_halvings))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CovFn, DomainKind, ScalarFn};
    use crate::models::{make_polynomial, PolynomialParams};
    use rand::SeedableRng;
    use std::sync::Arc;

    fn brownian(d: usize) -> ModelSpec {
        let cov: CovFn = Arc::new(move |_| DMatrix::identity(d, d));
        let lp: ScalarFn = Arc::new(|_| 0.0);
        ModelSpec::new(DomainKind::FullSpace(d), cov, lp).unwrap().piecewise_constant_cov(true)
    }

    #[test]
    fn degenerate_fields_do_not_move() {
        let cov: CovFn = Arc::new(|_| DMatrix::zeros(2, 2));
        let lp: ScalarFn = Arc::new(|_| 0.0);
        let spec = ModelSpec::new(DomainKind::FullSpace(2), cov, lp).unwrap();
        assert_eq!(step(&spec, &[0.3, -0.1], 0.5, &[1.0, 2.0]).unwrap(), vec![0.3, -0.1]);
    }

    #[test]
    fn brownian_unit_step_adds_noise() {
        let y = step(&brownian(2), &[1.0, 2.0], 1.0, &[0.5, -0.25]).unwrap();
        assert_eq!(y, vec![1.5, 1.75]);
    }

    #[test]
    fn halving_consumes_exactly_dt() {
        // large steps near an unattainable boundary: proposals often leave the simplex
        let spec = make_polynomial(PolynomialParams::wright_fisher(vec![1.0, 1.0])).unwrap();
        let config = SimConfig { dt: 0.05, ..Default::default() };
        let mut st = Stepper::new(&spec, &config);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = vec![0.5, 0.5];
        for _ in 0..2000 {
            x = st.advance(&x, &mut rng).unwrap();
            assert!(x.iter().all(|&v| v > 0.0));
            assert!((st.last_consumed - 0.05).abs() <= 1e-12);
        }
        assert!(st.halvings > 0);
    }

    #[test]
    fn resampling_stays_inside() {
        let spec = make_polynomial(PolynomialParams::wright_fisher(vec![0.5, 0.5])).unwrap();
        let config = SimConfig { dt: 0.05, boundary_policy: BoundaryPolicy::RejectResample, ..Default::default() };
        let mut st = Stepper::new(&spec, &config);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut x = vec![0.5, 0.5];
        for _ in 0..500 {
            match st.advance(&x, &mut rng) {
                Ok(y) => x = y,
                Err(Error::BoundaryExhausted(_)) => break,
                Err(e) => panic!("{e}"),
            }
            assert!(x.iter().all(|&v| v > 0.0));
        }
    }
}
