use nalgebra::{DMatrix, SymmetricEigen};

use super::{DomainKind, ModelSpec};
use crate::error::{Error, Result};

/// Eigenvalues below this fraction of the largest are treated as zero.
const ZERO_EIG_REL: f64 = 1e-12;
/// Eigenvalues below `-NEG_EIG_REL · trace` are reported as not PSD.
const NEG_EIG_REL: f64 = 1e-8;

/// Symmetric PSD square root of `c(x)`.
pub fn diffusion_root(spec: &ModelSpec, x: &[f64]) -> Result<DMatrix<f64>> {
    psd_sqrt(&spec.cov(x), spec.domain(), x)
}

/// Symmetric square root by eigendecomposition. On the simplex the result is
/// projected onto the tangent space so that `root · 1 = 0`.
pub fn psd_sqrt(c: &DMatrix<f64>, domain: DomainKind, x: &[f64]) -> Result<DMatrix<f64>> {
    let d = c.nrows();
    if c.ncols() != d || d != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: d });
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite covariance at {x:?}")));
    }
    let sym = (c + c.transpose()) * 0.5;
    let trace = sym.trace();
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::NotPsd { x: x.to_vec(), eigenvalue: f64::NAN })?;
    let max_eig = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -NEG_EIG_REL * trace.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd { x: x.to_vec(), eigenvalue: min_eig });
    }
    let cutoff = ZERO_EIG_REL * max_eig;
    let sqrt_eig = eig.eigenvalues.map(|l| if l > cutoff { l.sqrt() } else { 0.0 });
    let q = &eig.eigenvectors;
    let mut root = q * DMatrix::from_diagonal(&sqrt_eig) * q.transpose();
    if domain.is_simplex() {
        let p = DMatrix::identity(d, d) - DMatrix::from_element(d, d, 1.0 / d as f64);
        root = &p * root * &p;
    }
    Ok((&root + root.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_identity() {
        let c = DMatrix::identity(2, 2) * 4.0;
        let r = psd_sqrt(&c, DomainKind::FullSpace(2), &[0.0, 0.0]).unwrap();
        assert!((r - DMatrix::identity(2, 2) * 2.0).norm() < 1e-14);
    }

    #[test]
    fn rank_one_tangent() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let r = psd_sqrt(&c, DomainKind::Simplex(2), &[0.5, 0.5]).unwrap();
        let expected = &c / 2f64.sqrt();
        assert!((r - expected).norm() < 1e-14);
    }

    #[test]
    fn negative_eigenvalue_rejected() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        match psd_sqrt(&c, DomainKind::FullSpace(2), &[1.0, 2.0]) {
            Err(Error::NotPsd { eigenvalue, x }) => {
                assert!((eigenvalue + 0.5).abs() < 1e-12);
                assert_eq!(x, vec![1.0, 2.0]);
            }
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn tiny_negative_eigenvalue_is_clipped() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-14]);
        let r = psd_sqrt(&c, DomainKind::FullSpace(2), &[0.0, 0.0]).unwrap();
        assert_eq!(r[(1, 1)], 0.0);
    }

    #[test]
    fn zero_matrix() {
        let r = psd_sqrt(&DMatrix::zeros(3, 3), DomainKind::Simplex(3), &[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(r.norm(), 0.0);
    }
}
