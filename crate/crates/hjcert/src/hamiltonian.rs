//! Hamiltonian specifications.
//!
//! A `HamiltonianSpec` wraps an evaluator `H(x, p)` together with structural
//! metadata: convexity in `p`, an optional closed-form convex conjugate
//! `L(x, v)` (with its maximizing `p`), an optional gradient `∂_p H`, and the
//! search box used when the conjugate has to be computed numerically.
//! Every constructor enforces `H(x, 0) = 0` on the grid.

use std::sync::Arc;

use crate::error::{HjError, Result};
use crate::grid::DomainGrid;

pub type EvalFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type ConjugateFn = Arc<dyn Fn(&[f64], &[f64]) -> (f64, Vec<f64>) + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type DriftFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

const ZERO_MOMENTUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianVariant {
    Quadratic,
    TransportQuadratic,
    NormType,
    IsaacsComposite,
    Custom,
}

#[derive(Clone)]
pub struct HamiltonianSpec {
    pub variant: HamiltonianVariant,
    pub convex_in_p: bool,
    /// Half-width of the p-search box per axis for numerical conjugation.
    pub p_max: Vec<f64>,
    eval: EvalFn,
    conjugate: Option<ConjugateFn>,
    grad_p: Option<GradFn>,
}

impl std::fmt::Debug for HamiltonianSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianSpec")
            .field("variant", &self.variant)
            .field("convex_in_p", &self.convex_in_p)
            .field("p_max", &self.p_max)
            .field("analytic_conjugate", &self.conjugate.is_some())
            .field("grad_p", &self.grad_p.is_some())
            .finish()
    }
}

impl HamiltonianSpec {
    /// General constructor; validates `H(x, 0) = 0` on every grid node.
    pub fn new(
        grid: &DomainGrid,
        variant: HamiltonianVariant,
        convex_in_p: bool,
        p_max: Vec<f64>,
        eval: EvalFn,
        conjugate: Option<ConjugateFn>,
        grad_p: Option<GradFn>,
    ) -> Result<Self> {
        if p_max.len() != grid.dim() || p_max.iter().any(|&r| !(r > 0.0)) {
            return Err(HjError::Config(
                "p_max must be positive with one entry per axis".into(),
            ));
        }
        let zero = vec![0.0; grid.dim()];
        for x in grid.iter_points() {
            let h0 = eval(&x, &zero);
            if !h0.is_finite() || h0.abs() > ZERO_MOMENTUM_TOL {
                return Err(HjError::Construction(format!(
                    "H(x, 0) = {h0} at x = {x:?}; must vanish to {ZERO_MOMENTUM_TOL}"
                )));
            }
        }
        Ok(HamiltonianSpec {
            variant,
            convex_in_p,
            p_max,
            eval,
            conjugate,
            grad_p,
        })
    }

    /// H(x, p) = |p|^2 / 2, with conjugate L(v) = |v|^2 / 2 attained at p = v.
    pub fn quadratic(grid: &DomainGrid, p_max: Vec<f64>) -> Result<Self> {
        let eval: EvalFn = Arc::new(|_x, p| 0.5 * sq_norm(p));
        let conj: ConjugateFn = Arc::new(|_x, v| (0.5 * sq_norm(v), v.to_vec()));
        let grad: GradFn = Arc::new(|_x, p| p.to_vec());
        Self::new(
            grid,
            HamiltonianVariant::Quadratic,
            true,
            p_max,
            eval,
            Some(conj),
            Some(grad),
        )
    }

    /// H(x, p) = |p|^2 / 2 + <b(x), p> with drift field b;
    /// conjugate L(x, v) = |v - b(x)|^2 / 2 attained at p = v - b(x).
    pub fn transport_quadratic(
        grid: &DomainGrid,
        p_max: Vec<f64>,
        drift: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    ) -> Result<Self> {
        let b1 = drift.clone();
        let eval: EvalFn = Arc::new(move |x, p| {
            let b = b1(x);
            0.5 * sq_norm(p) + dot(&b, p)
        });
        let b2 = drift.clone();
        let conj: ConjugateFn = Arc::new(move |x, v| {
            let b = b2(x);
            let rel: Vec<f64> = v.iter().zip(&b).map(|(vi, bi)| vi - bi).collect();
            (0.5 * sq_norm(&rel), rel)
        });
        let b3 = drift;
        let grad: GradFn = Arc::new(move |x, p| {
            let b = b3(x);
            p.iter().zip(&b).map(|(pi, bi)| pi + bi).collect()
        });
        Self::new(
            grid,
            HamiltonianVariant::TransportQuadratic,
            true,
            p_max,
            eval,
            Some(conj),
            Some(grad),
        )
    }

    /// H(x, p) = |p| (Euclidean norm). Conjugate is the indicator of the
    /// unit ball: 0 on |v| <= 1, +inf outside, attained at p = 0.
    pub fn norm_type(grid: &DomainGrid, p_max: Vec<f64>) -> Result<Self> {
        let eval: EvalFn = Arc::new(|_x, p| sq_norm(p).sqrt());
        let conj: ConjugateFn = Arc::new(|_x, v| {
            let speed = sq_norm(v).sqrt();
            if speed <= 1.0 {
                (0.0, vec![0.0; v.len()])
            } else {
                (f64::INFINITY, vec![0.0; v.len()])
            }
        });
        Self::new(
            grid,
            HamiltonianVariant::NormType,
            true,
            p_max,
            eval,
            Some(conj),
            None,
        )
    }

    /// Custom evaluator; no analytic conjugate, conjugation goes through the
    /// numerical p-grid search.
    pub fn custom(
        grid: &DomainGrid,
        p_max: Vec<f64>,
        convex_in_p: bool,
        eval: EvalFn,
    ) -> Result<Self> {
        Self::new(
            grid,
            HamiltonianVariant::Custom,
            convex_in_p,
            p_max,
            eval,
            None,
            None,
        )
    }

    pub fn eval(&self, x: &[f64], p: &[f64]) -> f64 {
        (self.eval)(x, p)
    }

    pub fn analytic_conjugate(&self, x: &[f64], v: &[f64]) -> Option<(f64, Vec<f64>)> {
        self.conjugate.as_ref().map(|c| c(x, v))
    }

    pub fn has_analytic_conjugate(&self) -> bool {
        self.conjugate.is_some()
    }

    pub fn grad_p(&self, x: &[f64], p: &[f64]) -> Option<Vec<f64>> {
        self.grad_p.as_ref().map(|g| g(x, p))
    }

    pub fn has_grad_p(&self) -> bool {
        self.grad_p.is_some()
    }

    pub fn variant_name(&self) -> &'static str {
        match self.variant {
            HamiltonianVariant::Quadratic => "quadratic",
            HamiltonianVariant::TransportQuadratic => "transport-plus-quadratic",
            HamiltonianVariant::NormType => "norm-type",
            HamiltonianVariant::IsaacsComposite => "isaacs-composite",
            HamiltonianVariant::Custom => "custom",
        }
    }
}

pub(crate) fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridKind;

    fn grid() -> DomainGrid {
        DomainGrid::build(GridKind::Box, &[-2.0], &[2.0], &[41]).unwrap()
    }

    #[test]
    fn quadratic_basics() {
        let g = grid();
        let h = HamiltonianSpec::quadratic(&g, vec![4.0]).unwrap();
        assert_eq!(h.eval(&[0.3], &[2.0]), 2.0);
        let (l, p) = h.analytic_conjugate(&[0.0], &[1.0]).unwrap();
        assert_eq!(l, 0.5);
        assert_eq!(p, vec![1.0]);
    }

    #[test]
    fn transport_quadratic_conjugate() {
        let g = grid();
        let drift = Arc::new(|x: &[f64]| vec![-x[0]]);
        let h = HamiltonianSpec::transport_quadratic(&g, vec![4.0], drift).unwrap();
        // L(x, b(x)) = 0: moving with the drift is free
        let (l, _) = h.analytic_conjugate(&[1.0], &[-1.0]).unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn norm_type_conjugate_indicator() {
        let g = grid();
        let h = HamiltonianSpec::norm_type(&g, vec![4.0]).unwrap();
        assert_eq!(h.analytic_conjugate(&[0.0], &[0.5]).unwrap().0, 0.0);
        assert!(h.analytic_conjugate(&[0.0], &[2.0]).unwrap().0.is_infinite());
    }

    #[test]
    fn zero_momentum_check_rejects_offset() {
        let g = grid();
        let eval: EvalFn = Arc::new(|_x, p| 0.5 * sq_norm(p) + 1.0);
        let err = HamiltonianSpec::custom(&g, vec![4.0], true, eval).unwrap_err();
        assert!(matches!(err, HjError::Construction(_)));
    }
}
