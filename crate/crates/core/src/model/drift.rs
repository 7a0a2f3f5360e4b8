//! Drift `b = ½ div c + ½ c ∇log p` by finite differences inside the current cell.
//!
//! On the simplex the derivatives are taken in the chart `x ↦ (x_1, …, x_{d-1})`
//! (directions `e_i − e_d`), the last component is fixed by `Σ b_i = 0`.

use nalgebra::DMatrix;

use super::{rank_view, DomainKind, ModelSpec};
use crate::error::{Error, Result};

const REL_STEP: f64 = 1e-4;
const MIN_STEP: f64 = 1e-10;

/// Closed-form drift when the spec carries one, finite differences otherwise.
pub fn drift(spec: &ModelSpec, x: &[f64]) -> Result<Vec<f64>> {
    match spec.analytic_drift(x) {
        Some(b) => Ok(b),
        None => fd_drift(spec, x),
    }
}

/// Distance from `x` to the nearest cell or domain boundary, in stencil units.
fn boundary_distance(domain: DomainKind, x: &[f64], ranked: &[f64]) -> f64 {
    let min_gap = ranked.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    match domain {
        // a chart step moves two coordinates, so a gap can shrink by 2h
        DomainKind::Simplex(_) => {
            let min_x = x.iter().copied().fold(f64::INFINITY, f64::min);
            (0.5 * min_gap).min(min_x)
        }
        DomainKind::FullSpace(_) => min_gap.min(1.0),
    }
}

/// Stencil width used by [`fd_drift`] at `x`.
pub fn stencil_width(domain: DomainKind, x: &[f64]) -> Result<f64> {
    let view = rank_view(x)?;
    Ok((REL_STEP * boundary_distance(domain, x, &view.ranked)).max(MIN_STEP))
}

/// True when `y` lies in the closure of the cell `order` and in the open domain.
fn in_closed_cell(domain: DomainKind, order: &[usize], y: &[f64]) -> bool {
    if domain.is_simplex() && y.iter().any(|&v| v <= 0.0) {
        return false;
    }
    order.windows(2).all(|w| y[w[0]] >= y[w[1]])
}

enum Stencil {
    Central,
    Forward,
    Backward,
}

/// Generic finite-difference drift; ignores any closed-form drift on the spec.
pub fn fd_drift(spec: &ModelSpec, x: &[f64]) -> Result<Vec<f64>> {
    let domain = spec.domain();
    let d = domain.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    let view = rank_view(x)?;
    let h = (REL_STEP * boundary_distance(domain, x, &view.ranked)).max(MIN_STEP);
    let order = &view.rank_ids;
    let m = if domain.is_simplex() { d - 1 } else { d };

    let shifted = |j: usize, s: f64| -> Vec<f64> {
        let mut y = x.to_vec();
        y[j] += s;
        if domain.is_simplex() {
            y[d - 1] -= s;
        }
        y
    };

    let c0 = spec.cov(x);
    let lp0 = spec.log_density(x);
    // dc[j] = ∂_j c, dlp[j] = ∂_j log p
    let mut dc: Vec<DMatrix<f64>> = Vec::with_capacity(m);
    let mut dlp = vec![0.0; m];
    for j in 0..m {
        let plus = shifted(j, h);
        let minus = shifted(j, -h);
        let stencil = match (in_closed_cell(domain, order, &plus), in_closed_cell(domain, order, &minus)) {
            (true, true) => Stencil::Central,
            (true, false) if in_closed_cell(domain, order, &shifted(j, 2.0 * h)) => Stencil::Forward,
            (false, true) if in_closed_cell(domain, order, &shifted(j, -2.0 * h)) => Stencil::Backward,
            _ => return Err(Error::StepTooCloseToBoundary { coordinate: j, value: x[j] }),
        };
        match stencil {
            Stencil::Central => {
                let (cp, cm) = (spec.cov(&plus), spec.cov(&minus));
                dc.push((cp - cm) / (2.0 * h));
                dlp[j] = (spec.log_density(&plus) - spec.log_density(&minus)) / (2.0 * h);
            }
            Stencil::Forward | Stencil::Backward => {
                let s = if matches!(stencil, Stencil::Forward) { 1.0 } else { -1.0 };
                let y1 = shifted(j, s * h);
                let y2 = shifted(j, 2.0 * s * h);
                let (c1, c2) = (spec.cov(&y1), spec.cov(&y2));
                dc.push((&c1 * 4.0 - &c0 * 3.0 - c2) * (s / (2.0 * h)));
                let (l1, l2) = (spec.log_density(&y1), spec.log_density(&y2));
                dlp[j] = s * (4.0 * l1 - 3.0 * lp0 - l2) / (2.0 * h);
            }
        }
    }

    let mut b = vec![0.0; d];
    for (i, bi) in b.iter_mut().enumerate().take(m) {
        let mut acc = 0.0;
        for j in 0..m {
            acc += dc[j][(i, j)] + c0[(i, j)] * dlp[j];
        }
        *bi = 0.5 * acc;
    }
    if domain.is_simplex() {
        b[d - 1] = -b[..d - 1].iter().sum::<f64>();
        let mean = b.iter().sum::<f64>() / d as f64;
        b.iter_mut().for_each(|v| *v -= mean);
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite drift at {x:?}")));
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CovFn, ScalarFn};
    use std::sync::Arc;

    fn flat(d: usize) -> ModelSpec {
        let cov: CovFn = Arc::new(move |_| DMatrix::identity(d, d));
        let lp: ScalarFn = Arc::new(|_| 0.0);
        ModelSpec::new(DomainKind::FullSpace(d), cov, lp).unwrap()
    }

    #[test]
    fn constant_fields_have_zero_drift() {
        let b = fd_drift(&flat(3), &[0.3, -1.0, 2.0]).unwrap();
        assert!(b.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn gaussian_density_gives_ou_drift() {
        // p = exp(-|x|²/2), c = I  =>  b = -x/2
        let cov: CovFn = Arc::new(|_| DMatrix::identity(2, 2));
        let lp: ScalarFn = Arc::new(|x| -0.5 * (x[0] * x[0] + x[1] * x[1]));
        let spec = ModelSpec::new(DomainKind::FullSpace(2), cov, lp).unwrap();
        let b = fd_drift(&spec, &[0.7, -0.4]).unwrap();
        assert!((b[0] + 0.35).abs() < 1e-8);
        assert!((b[1] - 0.2).abs() < 1e-8);
    }

    #[test]
    fn exact_tie_uses_one_sided_differences() {
        // d = 2 full space tie: +h on x_1 stays in the closed cell (1,2), -h leaves it
        let cov: CovFn = Arc::new(|_| DMatrix::identity(2, 2));
        let lp: ScalarFn = Arc::new(|x| x[0] * x[0]);
        let spec = ModelSpec::new(DomainKind::FullSpace(2), cov, lp).unwrap();
        let b = fd_drift(&spec, &[0.5, 0.5]).unwrap();
        assert!((b[0] - 0.5).abs() < 1e-6, "{b:?}");
    }

    #[test]
    fn simplex_triple_tie_errors() {
        let cov: CovFn = Arc::new(|_| DMatrix::identity(4, 4));
        let lp: ScalarFn = Arc::new(|_| 0.0);
        let spec = ModelSpec::new(DomainKind::Simplex(4), cov, lp).unwrap();
        // direction e_2 - e_4: +h lifts x_2 above x_1, -h lifts x_4 above x_3
        let x = [0.2, 0.2, 0.3, 0.3];
        assert_eq!(
            fd_drift(&spec, &x),
            Err(Error::StepTooCloseToBoundary { coordinate: 1, value: 0.2 })
        );
    }

    #[test]
    fn width_scales_with_distance() {
        let s = DomainKind::Simplex(3);
        let h1 = stencil_width(s, &[0.2, 0.3, 0.5]).unwrap();
        assert!((h1 - 1e-4 * 0.05).abs() < 1e-15);
        let h2 = stencil_width(s, &[0.01, 0.3, 0.69]).unwrap();
        assert!((h2 - 1e-6).abs() < 1e-15);
    }
}
