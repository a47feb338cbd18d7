//! Smooth test functions for the viscosity machinery.
//!
//! The workhorse family is a saturating quadratic bump
//! f(x) = a - b * bump(s(x)) with bump(s) = rho^2 (1 - exp(-s / rho^2)),
//! where s is the squared distance to the center (a smooth periodic
//! surrogate on tori). The bump saturates outside radius rho, so f is
//! bounded on both sides and admissible for either operator kind.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::containment::{CovectorFn, ScalarFn};
use crate::grid::{DomainGrid, GridKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundedness {
    LowerBounded,
    UpperBounded,
    Bounded,
}

impl Boundedness {
    pub fn is_lower_bounded(self) -> bool {
        matches!(self, Boundedness::LowerBounded | Boundedness::Bounded)
    }

    pub fn is_upper_bounded(self) -> bool {
        matches!(self, Boundedness::UpperBounded | Boundedness::Bounded)
    }
}

#[derive(Debug, Clone)]
pub struct BumpParams {
    pub center: Vec<f64>,
    pub curvature: f64,
    pub offset: f64,
    pub radius: f64,
}

#[derive(Clone)]
pub struct SmoothTestFunction {
    eval: ScalarFn,
    diff: CovectorFn,
    pub boundedness: Boundedness,
    pub params: Option<BumpParams>,
}

impl std::fmt::Debug for SmoothTestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothTestFunction")
            .field("boundedness", &self.boundedness)
            .field("params", &self.params)
            .finish()
    }
}

impl SmoothTestFunction {
    pub fn new(eval: ScalarFn, diff: CovectorFn, boundedness: Boundedness) -> Self {
        SmoothTestFunction {
            eval,
            diff,
            boundedness,
            params: None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn diff(&self, x: &[f64]) -> Vec<f64> {
        (self.diff)(x)
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        SmoothTestFunction::new(
            Arc::new(move |_x| value),
            Arc::new(move |_x| vec![0.0; dim]),
            Boundedness::Bounded,
        )
    }

    /// Saturating quadratic bump centered at `center`.
    ///
    /// On tori the squared distance is replaced by the smooth periodic
    /// surrogate 2 (1 - cos(w d)) / w^2 per axis (w = 2 pi / period), which
    /// agrees with d^2 to fourth order and avoids the cut-locus kink.
    pub fn quadratic_bump(
        grid: &DomainGrid,
        center: Vec<f64>,
        curvature: f64,
        offset: f64,
        radius: f64,
    ) -> Self {
        assert!(radius > 0.0, "bump radius must be positive");
        let rho2 = radius * radius;
        let sq = squared_distance_surrogate(grid, center.clone());
        let dsq = squared_distance_gradient(grid, center.clone());

        let sq_e = sq.clone();
        let eval: ScalarFn = Arc::new(move |x| {
            let s = sq_e(x);
            offset - curvature * rho2 * (1.0 - (-s / rho2).exp())
        });
        let diff: CovectorFn = Arc::new(move |x| {
            let s = sq(x);
            let scale = -curvature * (-s / rho2).exp();
            dsq(x).into_iter().map(|g| scale * g).collect()
        });
        SmoothTestFunction {
            eval,
            diff,
            boundedness: Boundedness::Bounded,
            params: Some(BumpParams {
                center,
                curvature,
                offset,
                radius,
            }),
        }
    }

    /// Max discrepancy between the stored differential and central finite
    /// differences over grid-interior nodes (all nodes on tori).
    pub fn differential_residual(&self, grid: &DomainGrid) -> f64 {
        let d = grid.dim();
        let mut worst: f64 = 0.0;
        for flat in 0..grid.node_count() {
            let multi = grid.multi_index(flat);
            if grid.kind() == GridKind::Box
                && (0..d).any(|a| multi[a] == 0 || multi[a] + 1 == grid.nodes_per_axis()[a])
            {
                continue;
            }
            let x = grid.point(flat);
            let df = self.diff(&x);
            for axis in 0..d {
                let h = grid.spacing()[axis];
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[axis] += h;
                xm[axis] -= h;
                let fd = (self.eval(&xp) - self.eval(&xm)) / (2.0 * h);
                worst = worst.max((df[axis] - fd).abs());
            }
        }
        worst
    }
}

fn squared_distance_surrogate(grid: &DomainGrid, center: Vec<f64>) -> ScalarFn {
    match grid.kind() {
        GridKind::Box => Arc::new(move |x| {
            x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum()
        }),
        GridKind::Torus => {
            let periods: Vec<f64> = (0..grid.dim())
                .map(|a| grid.upper()[a] - grid.lower()[a])
                .collect();
            Arc::new(move |x| {
                x.iter()
                    .zip(&center)
                    .zip(&periods)
                    .map(|((a, b), period)| {
                        let w = 2.0 * PI / period;
                        2.0 * (1.0 - (w * (a - b)).cos()) / (w * w)
                    })
                    .sum()
            })
        }
    }
}

fn squared_distance_gradient(grid: &DomainGrid, center: Vec<f64>) -> CovectorFn {
    match grid.kind() {
        GridKind::Box => Arc::new(move |x| {
            x.iter().zip(&center).map(|(a, b)| 2.0 * (a - b)).collect()
        }),
        GridKind::Torus => {
            let periods: Vec<f64> = (0..grid.dim())
                .map(|a| grid.upper()[a] - grid.lower()[a])
                .collect();
            Arc::new(move |x| {
                x.iter()
                    .zip(&center)
                    .zip(&periods)
                    .map(|((a, b), period)| {
                        let w = 2.0 * PI / period;
                        2.0 * (w * (a - b)).sin() / w
                    })
                    .collect()
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridKind;

    #[test]
    fn bump_is_bounded_both_sides() {
        let g = DomainGrid::build(GridKind::Box, &[-2.0], &[2.0], &[81]).unwrap();
        let f = SmoothTestFunction::quadratic_bump(&g, vec![0.0], 1.5, 0.3, 0.5);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in g.iter_points() {
            let v = f.eval(&x);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        // range is [a - b rho^2, a]
        assert!(lo >= 0.3 - 1.5 * 0.25 - 1e-12);
        assert!(hi <= 0.3 + 1e-12);
    }

    #[test]
    fn differential_matches_central_differences_box() {
        let g = DomainGrid::build(GridKind::Box, &[-1.0, -1.0], &[1.0, 1.0], &[41, 41]).unwrap();
        let f = SmoothTestFunction::quadratic_bump(&g, vec![0.2, -0.3], 2.0, 0.0, 0.4);
        let dx = g.max_spacing();
        assert!(f.differential_residual(&g) <= 10.0 * dx * dx);
    }

    #[test]
    fn differential_matches_central_differences_torus() {
        let g = DomainGrid::build(GridKind::Torus, &[0.0], &[1.0], &[101]).unwrap();
        let f = SmoothTestFunction::quadratic_bump(&g, vec![0.35], 1.0, 0.1, 0.25);
        let dx = g.max_spacing();
        assert!(f.differential_residual(&g) <= 10.0 * dx * dx);
    }

    #[test]
    fn gradient_vanishes_at_center_and_far_field() {
        let g = DomainGrid::build(GridKind::Box, &[-2.0], &[2.0], &[81]).unwrap();
        let f = SmoothTestFunction::quadratic_bump(&g, vec![0.0], 1.0, 0.0, 0.2);
        assert!(f.diff(&[0.0])[0].abs() < 1e-15);
        // saturated tail: gradient decays like exp(-s/rho^2)
        assert!(f.diff(&[2.0])[0].abs() < 1e-12);
    }
}
