//! State space, rank machinery and the generic drift/diffusion construction
//! from a covariance field `c` and a density `p`.

mod drift;
mod rank;
mod root;

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::models::ModelFamily;

pub use drift::{drift, fd_drift, stencil_width};
pub use rank::{cell_of, rank_view, CellAssignment, CellLabel, RankView};
pub use root::{diffusion_root, psd_sqrt};

pub(crate) use rank::next_permutation;

/// Tolerance on `|Σx_i − 1|` for simplex points.
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;

/// State space of the diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    /// Open simplex `{x ∈ (0,1)^d : Σx_i = 1}`.
    Simplex(usize),
    /// All of `R^d`.
    FullSpace(usize),
}

impl DomainKind {
    pub fn dim(&self) -> usize {
        match *self {
            DomainKind::Simplex(d) | DomainKind::FullSpace(d) => d,
        }
    }

    pub fn is_simplex(&self) -> bool {
        matches!(self, DomainKind::Simplex(_))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() < 2 {
            return Err(Error::InvalidParameters(format!("dimension must be >= 2, got {}", self.dim())));
        }
        Ok(())
    }

    /// True when `x` lies in the open domain.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            DomainKind::FullSpace(_) => true,
            DomainKind::Simplex(_) => {
                x.iter().all(|&v| v > 0.0) && (x.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_SUM_TOL
            }
        }
    }
}

/// A point strictly inside a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePoint(Vec<f64>);

impl StatePoint {
    /// Validates `coords` against `domain`. Simplex inputs within 1e-6 of the
    /// hyperplane are renormalised onto it.
    pub fn new(domain: DomainKind, coords: Vec<f64>) -> Result<Self> {
        domain.validate()?;
        if coords.len() != domain.dim() {
            return Err(Error::DimensionMismatch { expected: domain.dim(), got: coords.len() });
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidState(format!("coordinate {i} is not finite")));
        }
        match domain {
            DomainKind::FullSpace(_) => Ok(Self(coords)),
            DomainKind::Simplex(_) => {
                if let Some(i) = coords.iter().position(|&v| v <= 0.0) {
                    return Err(Error::InvalidState(format!(
                        "simplex coordinate {i} must be positive, got {}",
                        coords[i]
                    )));
                }
                let s: f64 = coords.iter().sum();
                if (s - 1.0).abs() > 1e-6 {
                    return Err(Error::InvalidState(format!("simplex coordinates sum to {s}, not 1")));
                }
                Ok(Self(coords.into_iter().map(|v| v / s).collect()))
            }
        }
    }

    /// Barycentre of the simplex, or the origin of `R^d`.
    pub fn center(domain: DomainKind) -> Self {
        let d = domain.dim();
        match domain {
            DomainKind::Simplex(_) => Self(vec![1.0 / d as f64; d]),
            DomainKind::FullSpace(_) => Self(vec![0.0; d]),
        }
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for StatePoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub type CovFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Input pair `(c, p)` on a domain, plus optional closed-form drift.
///
/// Densities are unnormalised. Immutable once built and cheap to clone.
#[derive(Clone)]
pub struct ModelSpec {
    domain: DomainKind,
    cov: CovFn,
    density: ScalarFn,
    log_density: ScalarFn,
    analytic_drift: Option<VectorFn>,
    cell_smooth: bool,
    piecewise_constant_cov: bool,
    exchangeable: bool,
    family: ModelFamily,
}

impl ModelSpec {
    /// A conforming spec with `p = exp(log_density)`.
    pub fn new(domain: DomainKind, cov: CovFn, log_density: ScalarFn) -> Result<Self> {
        domain.validate()?;
        let ld = log_density.clone();
        Ok(Self {
            domain,
            cov,
            density: Arc::new(move |x| ld(x).exp()),
            log_density,
            analytic_drift: None,
            cell_smooth: true,
            piecewise_constant_cov: false,
            exchangeable: false,
            family: ModelFamily::Custom,
        })
    }

    pub fn with_density(mut self, density: ScalarFn) -> Self {
        self.density = density;
        self
    }

    pub fn with_analytic_drift(mut self, drift: VectorFn) -> Self {
        self.analytic_drift = Some(drift);
        self
    }

    /// Declares `c, p` symmetric under every relabelling of coordinates.
    pub fn exchangeable(mut self, yes: bool) -> Self {
        self.exchangeable = yes;
        self
    }

    /// Marks `c` as constant on each cell, enabling the per-cell root cache.
    pub fn piecewise_constant_cov(mut self, yes: bool) -> Self {
        self.piecewise_constant_cov = yes;
        self
    }

    /// Marks the spec as violating cell-wise continuity of `c p`.
    pub fn non_conforming(mut self) -> Self {
        self.cell_smooth = false;
        self
    }

    pub fn with_family(mut self, family: ModelFamily) -> Self {
        self.family = family;
        self
    }

    pub fn domain(&self) -> DomainKind {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn cov(&self, x: &[f64]) -> DMatrix<f64> {
        (self.cov)(x)
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        (self.density)(x)
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        (self.log_density)(x)
    }

    pub fn analytic_drift(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.analytic_drift.as_ref().map(|f| f(x))
    }

    pub fn has_analytic_drift(&self) -> bool {
        self.analytic_drift.is_some()
    }

    /// Same spec with the closed-form drift removed (forces finite differences).
    pub fn without_analytic_drift(&self) -> Self {
        let mut s = self.clone();
        s.analytic_drift = None;
        s
    }

    pub fn is_conforming(&self) -> bool {
        self.cell_smooth
    }

    pub fn is_exchangeable(&self) -> bool {
        self.exchangeable
    }

    pub fn has_piecewise_constant_cov(&self) -> bool {
        self.piecewise_constant_cov
    }

    pub fn family(&self) -> &ModelFamily {
        &self.family
    }
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("domain", &self.domain)
            .field("family", &self.family)
            .field("analytic_drift", &self.analytic_drift.is_some())
            .field("cell_smooth", &self.cell_smooth)
            .field("exchangeable", &self.exchangeable)
            .finish()
    }
}
