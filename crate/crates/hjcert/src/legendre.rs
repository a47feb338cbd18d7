//! Numerical convex conjugation and its diagnostics.
//!
//! Implements the convex conjugate L(x, v) = sup_p <p, v> - H(x, p), the
//! Fenchel-Young gap, the compact-set Hamiltonian bound H_bar(K, c), and the
//! sublinear domination function psi built from
//! phi(s) = s inf_{x in K} inf_{|v| >= s} L(x, v) / |v|.

use crate::error::{HjError, Result};
use crate::hamiltonian::{dot, sq_norm, HamiltonianSpec};
use crate::testfn::SmoothTestFunction;

/// Result of a conjugate evaluation.
#[derive(Debug, Clone)]
pub struct LagrangianValue {
    /// The conjugate value; `f64::INFINITY` when the supremum diverges.
    pub value: f64,
    /// Maximizing momentum (meaningful when `value` is finite).
    pub argmax_p: Vec<f64>,
    /// True when the numerical maximizer hit the p-search box boundary; the
    /// returned value is then only a lower bound on the true conjugate.
    pub saturated: bool,
}

#[derive(Debug, Clone)]
pub struct ConjugateOptions {
    /// p-grid resolution per axis; defaults to `p_max / 200`.
    pub dp: Option<f64>,
    /// Run one local coordinate-descent refinement pass around the grid argmax.
    pub refine: bool,
}

impl Default for ConjugateOptions {
    fn default() -> Self {
        ConjugateOptions {
            dp: None,
            refine: true,
        }
    }
}

/// Convex conjugate of `h` at (x, v). Uses the analytic conjugate when the
/// spec carries one; otherwise maximizes over a p-grid in the search box and
/// refines by coordinate descent.
pub fn conjugate(h: &HamiltonianSpec, x: &[f64], v: &[f64]) -> LagrangianValue {
    conjugate_with(h, x, v, &ConjugateOptions::default())
}

pub fn conjugate_with(
    h: &HamiltonianSpec,
    x: &[f64],
    v: &[f64],
    opts: &ConjugateOptions,
) -> LagrangianValue {
    if let Some((value, argmax_p)) = h.analytic_conjugate(x, v) {
        return LagrangianValue {
            value,
            argmax_p,
            saturated: false,
        };
    }
    numeric_conjugate(h, x, v, opts).expect("non-finite Hamiltonian in p-search box")
}

/// Grid-search conjugate, exposed separately so the analytic path can be
/// cross-checked against it.
pub fn numeric_conjugate(
    h: &HamiltonianSpec,
    x: &[f64],
    v: &[f64],
    opts: &ConjugateOptions,
) -> Result<LagrangianValue> {
    let d = v.len();
    let steps: Vec<usize> = (0..d)
        .map(|a| {
            let dp = opts.dp.unwrap_or(h.p_max[a] / 200.0);
            ((2.0 * h.p_max[a] / dp).round() as usize).max(2)
        })
        .collect();

    let mut best = f64::NEG_INFINITY;
    let mut best_p = vec![0.0; d];
    let total: usize = steps.iter().map(|s| s + 1).product();
    let mut p = vec![0.0; d];
    for code in 0..total {
        let mut rem = code;
        for a in 0..d {
            let i = rem % (steps[a] + 1);
            rem /= steps[a] + 1;
            p[a] = -h.p_max[a] + 2.0 * h.p_max[a] * i as f64 / steps[a] as f64;
        }
        let hval = h.eval(x, &p);
        if !hval.is_finite() {
            return Err(HjError::Evaluation(format!(
                "H(x, p) non-finite at x = {x:?}, p = {p:?}"
            )));
        }
        let g = dot(&p, v) - hval;
        if g > best {
            best = g;
            best_p.copy_from_slice(&p);
        }
    }

    if opts.refine {
        // one coordinate-descent pass: golden-section within one grid cell
        for a in 0..d {
            let dp = 2.0 * h.p_max[a] / steps[a] as f64;
            let lo = (best_p[a] - dp).max(-h.p_max[a]);
            let hi = (best_p[a] + dp).min(h.p_max[a]);
            let (pa, ga) = golden_max(lo, hi, 48, |t| {
                let mut q = best_p.clone();
                q[a] = t;
                dot(&q, v) - h.eval(x, &q)
            });
            if ga > best {
                best = ga;
                best_p[a] = pa;
            }
        }
    }

    let saturated = (0..d).any(|a| {
        let dp = 2.0 * h.p_max[a] / steps[a] as f64;
        best_p[a].abs() >= h.p_max[a] - 0.5 * dp
    });
    Ok(LagrangianValue {
        value: best,
        argmax_p: best_p,
        saturated,
    })
}

fn golden_max(mut lo: f64, mut hi: f64, iters: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

/// Fenchel-Young gap L(x, v) + H(x, p) - <p, v>; nonnegative up to the
/// conjugation tolerance, `+inf` when the conjugate diverges.
pub fn fenchel_young_gap(h: &HamiltonianSpec, x: &[f64], v: &[f64], p: &[f64]) -> f64 {
    let l = conjugate(h, x, v);
    if l.value.is_infinite() {
        return f64::INFINITY;
    }
    l.value + h.eval(x, p) - dot(p, v)
}

/// sup over x in K, |p| <= c of H(x, p), by scanning a p-grid intersected
/// with the ball of radius c.
pub fn h_bar(h: &HamiltonianSpec, k: &[Vec<f64>], c: f64, steps_per_axis: usize) -> Result<f64> {
    if k.is_empty() {
        return Err(HjError::Precondition("h_bar: empty compact set K".into()));
    }
    if !(c > 0.0) {
        return Err(HjError::Precondition("h_bar: radius c must be positive".into()));
    }
    let d = k[0].len();
    let n = steps_per_axis.max(2);
    let total = (n + 1).pow(d as u32);
    let mut sup = f64::NEG_INFINITY;
    let mut p = vec![0.0; d];
    for code in 0..total {
        let mut rem = code;
        for a in 0..d {
            let i = rem % (n + 1);
            rem /= n + 1;
            p[a] = -c + 2.0 * c * i as f64 / n as f64;
        }
        let r = sq_norm(&p).sqrt();
        if r > c {
            // project onto the sphere so the boundary of the ball is sampled
            if r == 0.0 {
                continue;
            }
            for a in 0..d {
                p[a] *= c / r;
            }
        }
        for x in k {
            let val = h.eval(x, &p);
            if !val.is_finite() {
                return Err(HjError::Evaluation(format!(
                    "h_bar: non-finite H at x = {x:?}, p = {p:?}"
                )));
            }
            sup = sup.max(val);
        }
    }
    Ok(sup)
}

#[derive(Debug, Clone)]
pub struct PsiOptions {
    pub s_min: f64,
    pub v_max: f64,
    pub knots_per_decade: usize,
    /// Number of unit directions sampled per magnitude (1D always uses both signs).
    pub directions: usize,
}

impl Default for PsiOptions {
    fn default() -> Self {
        PsiOptions {
            s_min: 1e-2,
            v_max: 1e2,
            knots_per_decade: 32,
            directions: 16,
        }
    }
}

/// Tabulated sublinear domination function psi(r) = C_{f,K} phi^{-1}(r).
///
/// phi is inverted by monotone linear interpolation in log-log coordinates
/// (exact on power laws), clamped below the first knot and extrapolated with
/// the last segment slope above the table.
#[derive(Debug, Clone)]
pub struct PsiFunction {
    /// Speed knots s_j (increasing).
    pub s_table: Vec<f64>,
    /// phi(s_j), strictly increasing.
    pub phi_table: Vec<f64>,
    /// C_{f,K} = max over K of |df|.
    pub c_fk: f64,
    /// Truncation bound recorded from the construction.
    pub v_max: f64,
}

impl PsiFunction {
    pub fn eval(&self, r: f64) -> f64 {
        self.c_fk * self.phi_inverse(r)
    }

    /// Monotone inverse of the phi table.
    pub fn phi_inverse(&self, r: f64) -> f64 {
        let n = self.phi_table.len();
        if r <= self.phi_table[0] {
            return self.s_table[0];
        }
        let (lr, ls): (Vec<f64>, Vec<f64>) = self
            .phi_table
            .iter()
            .zip(&self.s_table)
            .map(|(p, s)| (p.ln(), s.ln()))
            .unzip();
        let lrq = r.ln();
        // find the bracketing segment; extrapolate with the last slope
        let j = match lr.iter().position(|&v| v >= lrq) {
            Some(0) => 1,
            Some(j) => j,
            None => n - 1,
        };
        let t = (lrq - lr[j - 1]) / (lr[j] - lr[j - 1]);
        (ls[j - 1] + t * (ls[j] - ls[j - 1])).exp()
    }
}

/// Builds the psi function of the domination lemma for `f` on the compact
/// set `K` (a list of points).
pub fn build_psi(
    h: &HamiltonianSpec,
    f: &SmoothTestFunction,
    k: &[Vec<f64>],
    opts: &PsiOptions,
) -> Result<PsiFunction> {
    if k.is_empty() {
        return Err(HjError::Precondition("build_psi: empty compact set K".into()));
    }
    let d = k[0].len();
    let c_fk = k
        .iter()
        .map(|x| sq_norm(&f.diff(x)).sqrt())
        .fold(0.0f64, f64::max);

    let decades = (opts.v_max / opts.s_min).log10();
    let n_knots = ((decades * opts.knots_per_decade as f64).ceil() as usize).max(4) + 1;
    let s_table: Vec<f64> = (0..n_knots)
        .map(|j| opts.s_min * (opts.v_max / opts.s_min).powf(j as f64 / (n_knots - 1) as f64))
        .collect();

    let dirs = unit_directions(d, opts.directions);

    // ratio[j] = inf over x in K, directions, of L(x, s_j * dir) / s_j
    let mut ratio = vec![f64::INFINITY; n_knots];
    for (j, &s) in s_table.iter().enumerate() {
        for dir in &dirs {
            let v: Vec<f64> = dir.iter().map(|u| u * s).collect();
            for x in k {
                let l = conjugate(h, x, &v).value;
                if l.is_finite() {
                    ratio[j] = ratio[j].min(l / s);
                }
            }
        }
    }
    // inf over |v| >= s: suffix minimum over the magnitude table
    for j in (0..n_knots - 1).rev() {
        ratio[j] = ratio[j].min(ratio[j + 1]);
    }

    let phi_table: Vec<f64> = s_table.iter().zip(&ratio).map(|(s, r)| s * r).collect();
    for j in 0..n_knots {
        if !phi_table[j].is_finite() || phi_table[j] <= 0.0 {
            return Err(HjError::Construction(format!(
                "build_psi: phi({}) = {} is degenerate; conjugate has a flat band",
                s_table[j], phi_table[j]
            )));
        }
        if j > 0 && phi_table[j] <= phi_table[j - 1] {
            return Err(HjError::Construction(format!(
                "build_psi: phi not strictly increasing on [{}, {}]",
                s_table[j - 1],
                s_table[j]
            )));
        }
    }

    Ok(PsiFunction {
        s_table,
        phi_table,
        c_fk,
        v_max: opts.v_max,
    })
}

fn unit_directions(d: usize, requested: usize) -> Vec<Vec<f64>> {
    if d == 1 {
        return vec![vec![1.0], vec![-1.0]];
    }
    if d == 2 {
        let n = requested.max(4);
        return (0..n)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
    }
    // axis directions plus normalized diagonals for d >= 3
    let mut dirs = Vec::new();
    for a in 0..d {
        for sign in [-1.0, 1.0] {
            let mut v = vec![0.0; d];
            v[a] = sign;
            dirs.push(v);
        }
    }
    let diag = 1.0 / (d as f64).sqrt();
    dirs.push(vec![diag; d]);
    dirs.push(vec![-diag; d]);
    dirs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DomainGrid, GridKind};
    use std::sync::Arc;

    fn grid() -> DomainGrid {
        DomainGrid::build(GridKind::Box, &[-1.0], &[1.0], &[21]).unwrap()
    }

    #[test]
    fn quadratic_conjugate_is_self_dual() {
        let g = grid();
        let h = HamiltonianSpec::quadratic(&g, vec![4.0]).unwrap();
        let l = conjugate(&h, &[0.0], &[1.0]);
        assert_eq!(l.value, 0.5);
        assert_eq!(l.argmax_p, vec![1.0]);
        assert!(!l.saturated);
    }

    #[test]
    fn conjugate_nonnegative_at_zero_velocity() {
        // L(x, 0) = sup_p -H(x, p) >= -H(x, 0) = 0
        let g = grid();
        let h = HamiltonianSpec::custom(
            &g,
            vec![4.0],
            true,
            Arc::new(|x: &[f64], p: &[f64]| 0.5 * p[0] * p[0] + x[0] * p[0]),
        )
        .unwrap();
        for x in [[-1.0], [0.0], [0.7]] {
            let l = conjugate(&h, &x, &[0.0]);
            assert!(l.value >= -1e-12, "L(x,0) = {}", l.value);
        }
    }

    #[test]
    fn norm_type_saturation_signals_divergence() {
        // For H = |p| the conjugate at |v| > 1 is +inf; the grid search reports
        // a boundary maximizer whose value grows with p_max.
        let g = grid();
        let mut last = f64::NEG_INFINITY;
        for p_max in [1.0, 10.0, 100.0] {
            let h = HamiltonianSpec::custom(
                &g,
                vec![p_max],
                true,
                Arc::new(|_x: &[f64], p: &[f64]| p[0].abs()),
            )
            .unwrap();
            let l = numeric_conjugate(&h, &[0.0], &[2.0], &ConjugateOptions::default()).unwrap();
            assert!(l.saturated);
            assert!(l.value > last);
            last = l.value;
        }
        // while at |v| < 1 the sup is attained interior at p = 0
        let h = HamiltonianSpec::custom(
            &g,
            vec![10.0],
            true,
            Arc::new(|_x: &[f64], p: &[f64]| p[0].abs()),
        )
        .unwrap();
        let l = numeric_conjugate(&h, &[0.0], &[0.5], &ConjugateOptions::default()).unwrap();
        assert!(!l.saturated);
        assert!(l.value.abs() <= 1e-9);
    }

    #[test]
    fn fenchel_young_quadratic() {
        let g = grid();
        let h = HamiltonianSpec::quadratic(&g, vec![4.0]).unwrap();
        assert!(fenchel_young_gap(&h, &[0.0], &[1.0], &[1.0]).abs() < 1e-15);
        assert!((fenchel_young_gap(&h, &[0.0], &[1.0], &[0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn h_bar_examples() {
        let g = grid();
        let k: Vec<Vec<f64>> = g.iter_points().collect();
        let hq = HamiltonianSpec::quadratic(&g, vec![4.0]).unwrap();
        assert!((h_bar(&hq, &k, 2.0, 200).unwrap() - 2.0).abs() < 1e-12);
        let hn = HamiltonianSpec::norm_type(&g, vec![4.0]).unwrap();
        assert!((h_bar(&hn, &k, 3.0, 200).unwrap() - 3.0).abs() < 1e-12);
        // H = p^2/2 + x p on K = [-1, 1], c = 1: max is 1/2 + 1 = 3/2
        let hc = HamiltonianSpec::custom(
            &g,
            vec![4.0],
            true,
            Arc::new(|x: &[f64], p: &[f64]| 0.5 * p[0] * p[0] + x[0] * p[0]),
        )
        .unwrap();
        assert!((h_bar(&hc, &k, 1.0, 200).unwrap() - 1.5).abs() < 1e-12);
        assert!(h_bar(&hq, &[], 1.0, 10).is_err());
    }

    #[test]
    fn monotone_in_search_box() {
        let g = grid();
        let mut last = f64::NEG_INFINITY;
        for p_max in [0.5, 1.0, 2.0, 4.0] {
            let h = HamiltonianSpec::custom(
                &g,
                vec![p_max],
                true,
                Arc::new(|_x: &[f64], p: &[f64]| 0.5 * p[0] * p[0]),
            )
            .unwrap();
            let l = numeric_conjugate(&h, &[0.0], &[3.0], &ConjugateOptions::default()).unwrap();
            assert!(l.value >= last - 1e-12);
            last = l.value;
        }
    }

    #[test]
    fn psi_matches_closed_form_for_quadratic() {
        // L = v^2/2 gives phi(s) = s^2/2, so psi(r) = C sqrt(2 r)
        let g = grid();
        let h = HamiltonianSpec::quadratic(&g, vec![4.0]).unwrap();
        let f = SmoothTestFunction::quadratic_bump(&g, vec![0.0], 1.0, 0.0, 0.5);
        let k: Vec<Vec<f64>> = g.iter_points().collect();
        let psi = build_psi(&h, &f, &k, &PsiOptions::default()).unwrap();
        for r in [0.05_f64, 0.3, 1.7, 12.0, 80.0] {
            let expected = psi.c_fk * (2.0 * r).sqrt();
            let got = psi.eval(r);
            assert!(
                (got - expected).abs() <= 1e-3 * expected,
                "psi({r}) = {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn psi_rejects_flat_band() {
        let g = grid();
        let h = HamiltonianSpec::norm_type(&g, vec![4.0]).unwrap();
        let f = SmoothTestFunction::quadratic_bump(&g, vec![0.0], 1.0, 0.0, 0.5);
        let k: Vec<Vec<f64>> = g.iter_points().collect();
        let err = build_psi(&h, &f, &k, &PsiOptions::default()).unwrap_err();
        assert!(matches!(err, HjError::Construction(_)));
    }

    #[test]
    fn psi_sublinear_and_dominating() {
        let g = grid();
        let h = HamiltonianSpec::quadratic(&g, vec![4.0]).unwrap();
        let f = SmoothTestFunction::quadratic_bump(&g, vec![0.3], 2.0, 0.0, 0.4);
        let k: Vec<Vec<f64>> = g.iter_points().collect();
        let psi = build_psi(&h, &f, &k, &PsiOptions::default()).unwrap();
        // psi(r)/r drops by >= 10x over two decades
        let lo = psi.eval(0.1) / 0.1;
        let hi = psi.eval(10.0) / 10.0;
        assert!(hi <= 0.1 * lo + 1e-12);
        // domination |<df, q>| <= psi(L(x, q)) on the compact set K itself
        for x in &k {
            for j in 0..10 {
                let q = [-3.0 + 6.0 * j as f64 / 9.0];
                if q[0] == 0.0 {
                    continue;
                }
                let l = conjugate(&h, x, &q).value;
                let lhs = dot(&f.diff(x), &q).abs();
                assert!(lhs <= psi.eval(l) + 1e-9, "x={x:?} q={q:?}");
            }
        }
    }
}
