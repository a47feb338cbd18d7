//! Randomized invariants: duality gaps, curve algebra, and game-value
//! ordering that must hold for every admissible input, not just the fixtures.

use std::sync::Arc;

use hjcert::curve::Curve;
use hjcert::isaacs::{h_lower, h_upper, separable_spec};
use hjcert::legendre::{conjugate, fenchel_young_gap};
use hjcert::{DomainGrid, GridKind, HamiltonianSpec};
use proptest::prelude::*;

fn torus_1d() -> Arc<DomainGrid> {
    Arc::new(DomainGrid::build(GridKind::Torus, &[0.0], &[1.0], &[64]).unwrap())
}

fn box_2d() -> Arc<DomainGrid> {
    Arc::new(DomainGrid::build(GridKind::Box, &[-1.0, -1.0], &[1.0, 1.0], &[21, 21]).unwrap())
}

proptest! {
    /// H(x,p) + L(x,v) >= <p,v> for the quadratic model, at arbitrary
    /// momenta inside the admissible band.
    #[test]
    fn fenchel_young_quadratic(
        v in prop::array::uniform2(-3.0f64..3.0),
        p in prop::array::uniform2(-4.0f64..4.0),
        x in prop::array::uniform2(-0.9f64..0.9),
    ) {
        let grid = box_2d();
        let h = HamiltonianSpec::quadratic(&grid, vec![4.0, 4.0]).unwrap();
        prop_assert!(fenchel_young_gap(&h, &x, &v, &p) >= -1e-9);
    }

    /// The conjugate of p -> |p|^2/2 is v -> |v|^2/2 wherever the maximizing
    /// momentum stays strictly inside the band.
    #[test]
    fn quadratic_conjugate_closed_form(v in prop::array::uniform2(-3.5f64..3.5)) {
        let grid = box_2d();
        let h = HamiltonianSpec::quadratic(&grid, vec![4.0, 4.0]).unwrap();
        let lv = conjugate(&h, &[0.0, 0.0], &v);
        let exact = 0.5 * v.iter().map(|a| a * a).sum::<f64>();
        prop_assert!((lv.value - exact).abs() <= 1e-12 * (1.0 + exact));
        prop_assert!(!lv.saturated);
    }

    /// Splicing the head of a curve with its own shifted tail reproduces the
    /// original path pointwise.
    #[test]
    fn curve_shift_concat_identity(
        knots in prop::collection::vec(0.0f64..1.0, 4),
        cut in 0.05f64..0.95,
        probe in 0.0f64..1.0,
    ) {
        let grid = torus_1d();
        let n = knots.len();
        let times: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let points: Vec<Vec<f64>> = knots.iter().map(|k| vec![*k]).collect();
        let gamma = Curve::new(grid, times, points).unwrap();
        let tail = gamma.shift(cut).unwrap();
        let spliced = gamma.concat(&tail, cut).unwrap();
        let a = gamma.eval(probe);
        let b = spliced.eval(probe);
        prop_assert!((a[0] - b[0]).abs() <= 1e-9, "mismatch at t={probe}: {a:?} vs {b:?}");
    }

    /// Upper game value dominates the lower one at every (x, p), and for a
    /// separable cost the two coincide.
    #[test]
    fn separable_game_has_no_duality_gap(
        w1 in 0.05f64..2.0,
        w2 in 0.05f64..2.0,
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
        p in -3.0f64..3.0,
    ) {
        let grid = torus_1d();
        let theta: Vec<Vec<f64>> = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let spec = separable_spec(&grid, theta.clone(), theta, vec![4.0], a, b, w1, w2).unwrap();
        let x = [0.25];
        let (up, _) = h_upper(&spec, &x, &[p]);
        let (lo, _) = h_lower(&spec, &x, &[p]);
        prop_assert!(up >= lo - 1e-12);
        prop_assert!((up - lo).abs() <= 1e-12);
    }
}
