//! Covariances of the form `c_ij = −f^{ij}_τ(x) f_i(x_i) f_j(x_j) g(x)` for `i ≠ j`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelFamily;
use crate::error::{Error, Result};
use crate::model::{rank_view, CellLabel, DomainKind, ModelSpec, ScalarFn};

pub type UnivariateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// `f^{ij}_τ(x)`; must not depend on `x_i, x_j`.
pub type PairFn = Arc<dyn Fn(usize, usize, &CellLabel, &[f64]) -> f64 + Send + Sync>;

const PROBES: usize = 64;
const PROBE_SEED: u64 = 0x7261_6e6b;

#[derive(Clone)]
pub struct TractableParams {
    pub dim: usize,
    pub f: Vec<UnivariateFn>,
    pub pair: PairFn,
    pub g: ScalarFn,
    pub log_density: ScalarFn,
    pub exchangeable: bool,
}

impl fmt::Debug for TractableParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TractableParams").field("dim", &self.dim).finish_non_exhaustive()
    }
}

fn covariance(p: &TractableParams, x: &[f64]) -> DMatrix<f64> {
    let d = p.dim;
    let tau = rank_view(x).expect("finite state").cell();
    let g = (p.g)(x);
    let fx: Vec<f64> = (0..d).map(|i| (p.f[i])(x[i])).collect();
    let mut c = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            let v = -(p.pair)(i, j, &tau, x) * fx[i] * fx[j] * g;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    for i in 0..d {
        let off: f64 = (0..d).filter(|&j| j != i).map(|j| c[(i, j)]).sum();
        c[(i, i)] = -off;
    }
    c
}

fn uniform_simplex(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Random probing of positivity and of continuity of `f^{ij}` across cell walls.
fn probe(p: &TractableParams) -> Result<()> {
    let d = p.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    for _ in 0..PROBES {
        let x = uniform_simplex(&mut rng, d);
        for (i, (f, &xi)) in p.f.iter().zip(&x).enumerate() {
            let v = f(xi);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameters(format!("f_{}({xi}) = {v} is not positive", i + 1)));
            }
        }
        let gv = (p.g)(&x);
        if !(gv > 0.0 && gv.is_finite()) {
            return Err(Error::InvalidParameters(format!("g(x) = {gv} is not positive at {x:?}")));
        }
        // put two neighbours in rank on a common wall and compare both sides
        let view = rank_view(&x).expect("finite state");
        let k = rng.random_range(0..d - 1);
        let (a, b) = (view.rank_ids[k], view.rank_ids[k + 1]);
        let mut y = x.clone();
        let mid = 0.5 * (y[a] + y[b]);
        y[a] = mid;
        y[b] = mid;
        let left = CellLabel::from_raw(view.rank_ids.clone());
        let mut swapped = view.rank_ids.clone();
        swapped.swap(k, k + 1);
        let right = CellLabel::from_raw(swapped);
        for i in 0..d {
            for j in (i + 1)..d {
                let (u, v) = ((p.pair)(i, j, &left, &y), (p.pair)(i, j, &right, &y));
                if !(u >= 0.0 && u.is_finite()) {
                    return Err(Error::InvalidParameters(format!("f^{{{}{}}} = {u} is negative", i + 1, j + 1)));
                }
                if (u - v).abs() > 1e-9 * (1.0 + u.abs()) {
                    return Err(Error::InvalidParameters(format!(
                        "f^{{{}{}}} jumps across the wall between cells {left} and {right}: {u} vs {v}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Builds a tractable simplex model; the drift is obtained by finite differences.
pub fn make_tractable(params: TractableParams) -> Result<ModelSpec> {
    let d = params.dim;
    DomainKind::Simplex(d).validate()?;
    if params.f.len() != d {
        return Err(Error::InvalidParameters(format!("expected {d} functions f_i, got {}", params.f.len())));
    }
    probe(&params)?;
    let p = Arc::new(params.clone());
    let cov = Arc::new(move |x: &[f64]| covariance(&p, x));
    Ok(ModelSpec::new(DomainKind::Simplex(d), cov, params.log_density.clone())?
        .exchangeable(params.exchangeable)
        .with_family(ModelFamily::Tractable))
}

/// `κ_ij = α_ij x_i x_j`, `p = Π x_i^{a_i − 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialParams {
    /// Symmetric, nonnegative; the diagonal is ignored.
    pub alpha: DMatrix<f64>,
    pub a: Vec<f64>,
}

impl PolynomialParams {
    /// Wright–Fisher: `α_ij = 1`.
    pub fn wright_fisher(a: Vec<f64>) -> Self {
        let d = a.len();
        Self { alpha: DMatrix::from_element(d, d, 1.0), a }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.a.len();
        DomainKind::Simplex(d).validate()?;
        if self.alpha.nrows() != d || self.alpha.ncols() != d {
            return Err(Error::InvalidParameters(format!("alpha must be {d}x{d}")));
        }
        for i in 0..d {
            if !(self.a[i] > 0.0 && self.a[i].is_finite()) {
                return Err(Error::InvalidParameters(format!("a[{}] must be positive", i + 1)));
            }
            for j in 0..d {
                let v = self.alpha[(i, j)];
                if i != j && !(v >= 0.0 && v.is_finite() && v == self.alpha[(j, i)]) {
                    return Err(Error::InvalidParameters(format!(
                        "alpha must be symmetric and nonnegative, entry ({}, {}) = {v}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Polynomial (Jacobi-type) model; `c` is quadratic and the drift linear:
/// `b_i = ½ Σ_{j≠i} α_ij (a_i x_j − a_j x_i)`.
pub fn make_polynomial(params: PolynomialParams) -> Result<ModelSpec> {
    params.validate()?;
    let d = params.a.len();
    let alpha = Arc::new(params.alpha.clone());
    let al = alpha.clone();
    let pair: PairFn = Arc::new(move |i, j, _, _| al[(i, j)]);
    let ident: UnivariateFn = Arc::new(|v| v);
    let a = params.a.clone();
    let lp: ScalarFn = Arc::new(move |x| a.iter().zip(x).map(|(ai, xi)| (ai - 1.0) * xi.ln()).sum());
    let off = |m: &DMatrix<f64>| -> Vec<f64> {
        (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| m[(i, j)])).collect()
    };
    let exchangeable = params.a.iter().all(|&v| v == params.a[0]) && {
        let o = off(&params.alpha);
        o.iter().all(|&v| v == o[0])
    };
    let spec = make_tractable(TractableParams {
        dim: d,
        f: vec![ident; d],
        pair,
        g: Arc::new(|_| 1.0),
        log_density: lp,
        exchangeable,
    })?;
    let a = params.a.clone();
    let drift = Arc::new(move |x: &[f64]| {
        (0..d)
            .map(|i| {
                0.5 * (0..d)
                    .filter(|&j| j != i)
                    .map(|j| alpha[(i, j)] * (a[i] * x[j] - a[j] * x[i]))
                    .sum::<f64>()
            })
            .collect()
    });
    Ok(spec.with_analytic_drift(drift).with_family(ModelFamily::Polynomial(params)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fd_drift;

    #[test]
    fn wright_fisher_covariance_and_drift() {
        let spec = make_polynomial(PolynomialParams::wright_fisher(vec![0.5, 1.0, 2.0])).unwrap();
        let x = [0.2, 0.3, 0.5];
        let c = spec.cov(&x);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { x[i] * (1.0 - x[i]) } else { -x[i] * x[j] };
                assert!((c[(i, j)] - want).abs() < 1e-15);
            }
        }
        let b = spec.analytic_drift(&x).unwrap();
        let fd = fd_drift(&spec, &x).unwrap();
        for i in 0..3 {
            let want = 0.5 * ([0.5, 1.0, 2.0][i] - 3.5 * x[i]);
            assert!((b[i] - want).abs() < 1e-14);
            assert!((fd[i] - want).abs() < 1e-6);
        }
    }

    #[test]
    fn general_alpha_fd_agrees() {
        let alpha = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 0.5, 2.0, 0.5, 0.0]);
        let spec = make_polynomial(PolynomialParams { alpha, a: vec![1.5, 0.7, 1.1] }).unwrap();
        let x = [0.25, 0.35, 0.4];
        let b = spec.analytic_drift(&x).unwrap();
        let fd = fd_drift(&spec, &x).unwrap();
        for i in 0..3 {
            assert!((b[i] - fd[i]).abs() < 1e-6, "{b:?} {fd:?}");
        }
    }

    #[test]
    fn nonpositive_f_rejected() {
        let f: UnivariateFn = Arc::new(|v| v - 0.3);
        let p = TractableParams {
            dim: 3,
            f: vec![f; 3],
            pair: Arc::new(|_, _, _, _| 1.0),
            g: Arc::new(|_| 1.0),
            log_density: Arc::new(|_| 0.0),
            exchangeable: true,
        };
        assert!(matches!(make_tractable(p), Err(Error::InvalidParameters(_))));
    }

    #[test]
    fn discontinuous_pair_rejected() {
        let f: UnivariateFn = Arc::new(|v| v);
        let p = TractableParams {
            dim: 3,
            f: vec![f; 3],
            pair: Arc::new(|_, _, tau: &CellLabel, _| if tau.name_at(0) == 0 { 1.0 } else { 2.0 }),
            g: Arc::new(|_| 1.0),
            log_density: Arc::new(|_| 0.0),
            exchangeable: false,
        };
        assert!(matches!(make_tractable(p), Err(Error::InvalidParameters(_))));
    }

    #[test]
    fn asymmetric_alpha_rejected() {
        let alpha = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(make_polynomial(PolynomialParams { alpha, a: vec![1.0, 1.0] }).is_err());
    }
}
