//! Containment (Lyapunov) functions.
//!
//! A containment function Υ ≥ 0 has compact sublevel sets and a certified
//! constant C_Υ bounding H(x, dΥ(x)); it is the device that keeps finite-cost
//! trajectories inside compacts on non-compact domains.

use std::sync::Arc;

use crate::error::{HjError, Result};
use crate::grid::{DomainGrid, GridKind};
use crate::hamiltonian::HamiltonianSpec;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type CovectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Margin added above the empirical sup of H(x, dΥ(x)) so the strict
/// inequality sup H(x, dΥ) < C_Υ holds numerically.
pub const CONTAINMENT_MARGIN: f64 = 1e-6;

#[derive(Clone)]
pub struct ContainmentSpec {
    upsilon: ScalarFn,
    d_upsilon: CovectorFn,
    pub c_upsilon: f64,
    pub certified: bool,
}

impl std::fmt::Debug for ContainmentSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContainmentSpec")
            .field("c_upsilon", &self.c_upsilon)
            .field("certified", &self.certified)
            .finish()
    }
}

impl ContainmentSpec {
    pub fn new(upsilon: ScalarFn, d_upsilon: CovectorFn, c_upsilon: f64, certified: bool) -> Self {
        ContainmentSpec {
            upsilon,
            d_upsilon,
            c_upsilon,
            certified,
        }
    }

    pub fn upsilon(&self, x: &[f64]) -> f64 {
        (self.upsilon)(x)
    }

    pub fn d_upsilon(&self, x: &[f64]) -> Vec<f64> {
        (self.d_upsilon)(x)
    }

    /// The trivial containment function for an already-compact domain.
    pub fn trivial(dim: usize) -> Self {
        ContainmentSpec::new(
            Arc::new(|_x| 0.0),
            Arc::new(move |_x| vec![0.0; dim]),
            0.0,
            true,
        )
    }

    /// Checks the certification inequality sup_grid H(x, dΥ(x)) ≤ C_Υ.
    pub fn check_certified(&self, grid: &DomainGrid, h: &HamiltonianSpec) -> Result<f64> {
        let mut sup = f64::NEG_INFINITY;
        for x in grid.iter_points() {
            let val = h.eval(&x, &self.d_upsilon(&x));
            if !val.is_finite() {
                return Err(HjError::Construction(format!(
                    "H(x, dY(x)) non-finite at x = {x:?}"
                )));
            }
            sup = sup.max(val);
        }
        if sup > self.c_upsilon {
            return Err(HjError::Construction(format!(
                "sup H(x, dY(x)) = {sup} exceeds C_Y = {}",
                self.c_upsilon
            )));
        }
        Ok(sup)
    }
}

/// Builds the standard containment function for a grid.
///
/// Tori are compact, so Υ ≡ 0 with C_Υ = 0. Boxes get
/// Υ(x) = log(1 + |x - x_c|^2) / 2 centered at the grid node nearest the
/// box center, with C_Υ set to the grid-sup of H(x, dΥ(x)) plus a margin.
pub fn standard_containment(grid: &DomainGrid, h: &HamiltonianSpec) -> Result<ContainmentSpec> {
    if grid.kind() == GridKind::Torus {
        return Ok(ContainmentSpec::trivial(grid.dim()));
    }
    // center on a node so the grid infimum of Y is exactly zero
    let center = grid.center();
    let xc = grid
        .iter_points()
        .min_by(|a, b| {
            grid.distance(a, &center)
                .total_cmp(&grid.distance(b, &center))
        })
        .expect("nonempty grid");

    let xc_u = xc.clone();
    let upsilon: ScalarFn = Arc::new(move |x| {
        let r2: f64 = x.iter().zip(&xc_u).map(|(a, b)| (a - b) * (a - b)).sum();
        0.5 * (1.0 + r2).ln()
    });
    let xc_d = xc.clone();
    let d_upsilon: CovectorFn = Arc::new(move |x| {
        let r2: f64 = x.iter().zip(&xc_d).map(|(a, b)| (a - b) * (a - b)).sum();
        x.iter().zip(&xc_d).map(|(a, b)| (a - b) / (1.0 + r2)).collect()
    });

    let mut sup = f64::NEG_INFINITY;
    for x in grid.iter_points() {
        let val = h.eval(&x, &d_upsilon(&x));
        if !val.is_finite() {
            return Err(HjError::Construction(format!(
                "containment certification failed: H(x, dY(x)) non-finite at x = {x:?}"
            )));
        }
        sup = sup.max(val);
    }
    Ok(ContainmentSpec::new(
        upsilon,
        d_upsilon,
        sup + CONTAINMENT_MARGIN,
        true,
    ))
}
