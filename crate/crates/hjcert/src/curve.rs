//! Admissible curves and their cost functionals.
//!
//! Curves are piecewise linear with segment-constant velocities, so the
//! closure operations (time shift, concatenation) are exact splices and every
//! segment contributes a constant Lagrangian value to the quadratures. Torus
//! segments travel along the minimal-displacement representative.

use std::sync::Arc;

use rand::Rng;

use crate::containment::ContainmentSpec;
use crate::error::{HjError, Result};
use crate::grid::DomainGrid;
use crate::hamiltonian::{dot, HamiltonianSpec};
use crate::legendre::conjugate;
use crate::testfn::SmoothTestFunction;

const KNOT_MATCH_TOL: f64 = 1e-9;

#[derive(Clone)]
pub struct Curve {
    grid: Arc<DomainGrid>,
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
}

impl std::fmt::Debug for Curve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Curve")
            .field("knots", &self.times.len())
            .field("horizon", &self.horizon())
            .finish()
    }
}

impl Curve {
    pub fn new(grid: Arc<DomainGrid>, times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() < 2 || times.len() != points.len() {
            return Err(HjError::Config(
                "curve needs matching times/points with at least two knots".into(),
            ));
        }
        if times[0] != 0.0 {
            return Err(HjError::Config("curve must start at t = 0".into()));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(HjError::Config("knot times must be strictly increasing".into()));
            }
        }
        let points: Vec<Vec<f64>> = points
            .into_iter()
            .map(|x| {
                if x.len() != grid.dim() {
                    return Err(HjError::Config("knot dimension mismatch".into()));
                }
                if !grid.contains(&x) {
                    return Err(HjError::Config(format!("knot {x:?} outside the domain")));
                }
                Ok(grid.canonicalize(&x))
            })
            .collect::<Result<_>>()?;
        Ok(Curve { grid, times, points })
    }

    /// Constant curve at `x` on `[0, horizon]`.
    pub fn constant(grid: Arc<DomainGrid>, x: Vec<f64>, horizon: f64) -> Result<Self> {
        let x2 = x.clone();
        Curve::new(grid, vec![0.0, horizon], vec![x, x2])
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn knots(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn segment_count(&self) -> usize {
        self.times.len() - 1
    }

    /// Velocity of segment `i` (minimal-displacement representative on tori).
    pub fn velocity(&self, i: usize) -> Vec<f64> {
        let dt = self.times[i + 1] - self.times[i];
        self.grid
            .displacement(&self.points[i], &self.points[i + 1])
            .into_iter()
            .map(|d| d / dt)
            .collect()
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(0.0, self.horizon());
        let i = match self.times.binary_search_by(|probe| probe.total_cmp(&t)) {
            Ok(i) => return self.points[i.min(self.points.len() - 1)].clone(),
            Err(i) => i - 1,
        };
        let v = self.velocity(i);
        let dt = t - self.times[i];
        let raw: Vec<f64> = self.points[i]
            .iter()
            .zip(&v)
            .map(|(x, vi)| x + vi * dt)
            .collect();
        self.grid.canonicalize(&raw)
    }

    /// Largest reconstruction error of `x_{i+1}` from `x_i + v_i dt_i`.
    pub fn velocity_consistency_residual(&self) -> f64 {
        (0..self.segment_count())
            .map(|i| {
                let v = self.velocity(i);
                let dt = self.times[i + 1] - self.times[i];
                let rebuilt: Vec<f64> = self.points[i]
                    .iter()
                    .zip(&v)
                    .map(|(x, vi)| x + vi * dt)
                    .collect();
                self.grid.distance(&rebuilt, &self.points[i + 1])
            })
            .fold(0.0, f64::max)
    }

    /// The curve t -> gamma(t + tau) on the remaining horizon, re-knotted at
    /// tau when tau falls inside a segment.
    pub fn shift(&self, tau: f64) -> Result<Curve> {
        if !(0.0..self.horizon()).contains(&tau) {
            return Err(HjError::Precondition(format!(
                "shift time {tau} outside [0, {})",
                self.horizon()
            )));
        }
        let mut times = vec![0.0];
        let mut points = vec![self.eval(tau)];
        for (t, x) in self.times.iter().zip(&self.points) {
            if *t > tau + KNOT_MATCH_TOL {
                times.push(t - tau);
                points.push(x.clone());
            }
        }
        Curve::new(self.grid.clone(), times, points)
    }

    /// The spliced curve equal to `self` on [0, tau] and to
    /// `other(t - tau)` afterwards. Endpoints must agree within tolerance.
    pub fn concat(&self, other: &Curve, tau: f64) -> Result<Curve> {
        if tau > self.horizon() + KNOT_MATCH_TOL {
            return Err(HjError::Precondition(format!(
                "splice time {tau} beyond first curve horizon {}",
                self.horizon()
            )));
        }
        let joint = self.eval(tau);
        let gap = self.grid.distance(&joint, &other.points[0]);
        if gap > KNOT_MATCH_TOL {
            return Err(HjError::Splice { gap });
        }
        let mut times = Vec::new();
        let mut points = Vec::new();
        for (t, x) in self.times.iter().zip(&self.points) {
            if *t < tau - KNOT_MATCH_TOL {
                times.push(*t);
                points.push(x.clone());
            }
        }
        times.push(tau);
        points.push(joint);
        for (t, x) in other.times.iter().zip(&other.points).skip(1) {
            times.push(tau + t);
            points.push(x.clone());
        }
        Curve::new(self.grid.clone(), times, points)
    }

    /// Segments of the curve clipped to `[0, t_end]` as
    /// (t_start, t_len, midpoint, velocity) tuples.
    fn clipped_segments(&self, t_end: f64) -> Vec<(f64, f64, Vec<f64>, Vec<f64>)> {
        let mut out = Vec::new();
        for i in 0..self.segment_count() {
            let a = self.times[i];
            if a >= t_end {
                break;
            }
            let b = self.times[i + 1].min(t_end);
            let v = self.velocity(i);
            let mid_t = 0.5 * (a + b);
            let mid: Vec<f64> = self
                .points[i]
                .iter()
                .zip(&v)
                .map(|(x, vi)| x + vi * (mid_t - a))
                .collect();
            out.push((a, b - a, self.grid.canonicalize(&mid), v));
        }
        out
    }
}

/// Integral of the Lagrangian along the curve up to time `t_end`, by midpoint
/// quadrature per segment (exact in v, second order in x). Returns `+inf`
/// when any segment is inadmissible.
pub fn action_cost(h: &HamiltonianSpec, curve: &Curve, t_end: f64) -> f64 {
    let mut total = 0.0;
    for (_a, len, mid, v) in curve.clipped_segments(t_end) {
        let l = conjugate(h, &mid, &v).value;
        if l.is_infinite() {
            return f64::INFINITY;
        }
        total += len * l;
    }
    total
}

/// Per-segment Lagrangian values and the cumulative action at the knots,
/// using the full-segment midpoint convention.
fn action_table(h: &HamiltonianSpec, curve: &Curve) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = curve.segment_count();
    let mut seg_l = Vec::with_capacity(m);
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0.0);
    for (_, len, mid, v) in curve.clipped_segments(curve.horizon()) {
        let l = conjugate(h, &mid, &v).value;
        if l.is_infinite() {
            return None;
        }
        seg_l.push(l);
        cum.push(cum.last().unwrap() + len * l);
    }
    Some((seg_l, cum))
}

#[derive(Debug, Clone, Copy)]
pub struct JLambda {
    pub value: f64,
    /// True when the frozen-endpoint tail closure is not exact because
    /// L(gamma(T_cut), 0) > 0; the tail then under-represents the cost.
    pub approximate_tail: bool,
}

/// Discounted payoff of the stationary control problem along one curve,
/// truncated at `t_cut` with the frozen-endpoint tail closure.
///
/// Computes `int_0^{t_cut} (h(gamma(t)) - A(t)) e^{-t/lambda}/lambda dt
/// + e^{-t_cut/lambda} (h(gamma(t_cut)) - A(t_cut))` by composite midpoint
/// quadrature on the knot-refined partition with substep <= `quad_dt`.
pub fn j_lambda(
    ham: &HamiltonianSpec,
    curve: &Curve,
    lambda: f64,
    h_field: &dyn Fn(&[f64]) -> f64,
    t_cut: f64,
    quad_dt: f64,
) -> Result<JLambda> {
    if !(lambda > 0.0) {
        return Err(HjError::Parameter("j_lambda: lambda must be positive".into()));
    }
    if t_cut > curve.horizon() + KNOT_MATCH_TOL {
        return Err(HjError::Precondition(
            "j_lambda: t_cut beyond the curve horizon".into(),
        ));
    }
    let Some((seg_l, cum)) = action_table(ham, curve) else {
        return Ok(JLambda {
            value: f64::NEG_INFINITY,
            approximate_tail: false,
        });
    };

    let mut integral = 0.0;
    for i in 0..curve.segment_count() {
        let a = curve.times()[i];
        if a >= t_cut {
            break;
        }
        let b = curve.times()[i + 1].min(t_cut);
        let n_sub = (((b - a) / quad_dt).ceil() as usize).max(1);
        let sub = (b - a) / n_sub as f64;
        for k in 0..n_sub {
            let t0 = a + k as f64 * sub;
            let t = t0 + 0.5 * sub;
            let action = cum[i] + (t - curve.times()[i]) * seg_l[i];
            // exact integral of the discount kernel over the subinterval;
            // only the integrand is frozen at the midpoint
            let weight = (-t0 / lambda).exp() - (-(t0 + sub) / lambda).exp();
            integral += weight * (h_field(&curve.eval(t)) - action);
        }
    }

    let endpoint = curve.eval(t_cut);
    let a_cut = {
        // cumulative action at t_cut
        let mut a = 0.0;
        for i in 0..curve.segment_count() {
            let lo = curve.times()[i];
            if lo >= t_cut {
                break;
            }
            let hi = curve.times()[i + 1].min(t_cut);
            a += (hi - lo) * seg_l[i];
        }
        a
    };
    let tail = (-t_cut / lambda).exp() * (h_field(&endpoint) - a_cut);
    let frozen_cost = conjugate(ham, &endpoint, &vec![0.0; curve.grid().dim()]).value;
    Ok(JLambda {
        value: integral + tail,
        approximate_tail: frozen_cost.abs() > 1e-9,
    })
}

/// Payoff of the evolutionary problem along one curve:
/// `-int_0^t e^{-lambda s} L ds + e^{-lambda t} u0(gamma(t))`.
pub fn w_lambda(
    ham: &HamiltonianSpec,
    curve: &Curve,
    t: f64,
    lambda: f64,
    u0: &dyn Fn(&[f64]) -> f64,
) -> Result<f64> {
    if lambda < 0.0 {
        return Err(HjError::Parameter("w_lambda: lambda must be nonnegative".into()));
    }
    if t > curve.horizon() + KNOT_MATCH_TOL {
        return Err(HjError::Precondition(
            "w_lambda: time beyond the curve horizon".into(),
        ));
    }
    let mut cost = 0.0;
    for (a, len, mid, v) in curve.clipped_segments(t) {
        let l = conjugate(ham, &mid, &v).value;
        if l.is_infinite() {
            return Ok(f64::NEG_INFINITY);
        }
        // exact integral of the exponential weight over the segment
        let w = if lambda == 0.0 {
            len
        } else {
            ((-lambda * a).exp() - (-lambda * (a + len)).exp()) / lambda
        };
        cost += w * l;
    }
    Ok(-cost + (-lambda * t).exp() * u0(&curve.eval(t)))
}

/// Containment residual `Y(gamma(T)) - Y(gamma(0)) - action - T C_Y`;
/// nonpositive (up to tolerance) for certified containment functions and
/// finite-cost curves.
pub fn containment_check(
    ham: &HamiltonianSpec,
    ups: &ContainmentSpec,
    curve: &Curve,
    t_end: f64,
) -> f64 {
    let action = action_cost(ham, curve, t_end);
    ups.upsilon(&curve.eval(t_end)) - ups.upsilon(&curve.eval(0.0)) - action - t_end * ups.c_upsilon
}

#[derive(Debug, Clone)]
pub struct DiffInclusion {
    pub curve: Curve,
    /// `int <df, gamma'> - int [L + H(x, df)]`; zero along exact solutions
    /// of the inclusion by Fenchel-Young equality.
    pub young_residual: f64,
}

/// Integrates the differential inclusion `gamma' = dH/dp (gamma, df(gamma))`
/// by RK4, clamped/wrapped at the domain boundary, and verifies the
/// Fenchel-Young equality along the discrete path.
pub fn diff_inclusion_path(
    ham: &HamiltonianSpec,
    f: &SmoothTestFunction,
    grid: Arc<DomainGrid>,
    x0: &[f64],
    t_end: f64,
    step: f64,
    residual_threshold: f64,
) -> Result<DiffInclusion> {
    if !ham.convex_in_p || !ham.has_grad_p() {
        return Err(HjError::Capability(
            "differential inclusion needs a convex Hamiltonian with a p-gradient".into(),
        ));
    }
    if !(step > 0.0 && step <= t_end) {
        return Err(HjError::Parameter("step must lie in (0, T]".into()));
    }
    let field = |x: &[f64]| -> Vec<f64> {
        let xc = grid.canonicalize(x);
        ham.grad_p(&xc, &f.diff(&xc)).expect("grad_p checked above")
    };

    let n = (t_end / step).round().max(1.0) as usize;
    let dt = t_end / n as f64;
    let mut times = Vec::with_capacity(n + 1);
    let mut points = Vec::with_capacity(n + 1);
    let mut x = grid.canonicalize(x0);
    times.push(0.0);
    points.push(x.clone());
    for k in 0..n {
        let k1 = field(&x);
        let k2 = field(&offset(&x, &k1, 0.5 * dt));
        let k3 = field(&offset(&x, &k2, 0.5 * dt));
        let k4 = field(&offset(&x, &k3, dt));
        let mut next = x.clone();
        for a in 0..x.len() {
            next[a] += dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
        }
        x = grid.canonicalize(&next);
        times.push((k + 1) as f64 * dt);
        points.push(x.clone());
    }
    let curve = Curve::new(grid.clone(), times, points)?;
    let young_residual = young_equality_residual(ham, f, &curve, t_end);
    if young_residual.abs() > residual_threshold {
        return Err(HjError::IntegrationQuality {
            residual: young_residual,
            threshold: residual_threshold,
        });
    }
    Ok(DiffInclusion {
        curve,
        young_residual,
    })
}

/// `int <df(gamma), gamma'> - int [L(gamma, gamma') + H(gamma, df(gamma))]`
/// over [0, t_end] by per-segment midpoint quadrature.
pub fn young_equality_residual(
    ham: &HamiltonianSpec,
    f: &SmoothTestFunction,
    curve: &Curve,
    t_end: f64,
) -> f64 {
    let mut res = 0.0;
    for (_a, len, mid, v) in curve.clipped_segments(t_end) {
        let df = f.diff(&mid);
        let l = conjugate(ham, &mid, &v).value;
        res += len * (dot(&df, &v) - l - ham.eval(&mid, &df));
    }
    res
}

/// Integral form of Fenchel-Young along a curve:
/// `int <df, gamma'> - action - int H(gamma, df)`; nonpositive up to
/// quadrature and conjugation tolerance.
pub fn fenchel_young_along(
    ham: &HamiltonianSpec,
    f: &SmoothTestFunction,
    curve: &Curve,
    t_end: f64,
) -> f64 {
    young_equality_residual(ham, f, curve, t_end)
}

fn offset(x: &[f64], dir: &[f64], scale: f64) -> Vec<f64> {
    x.iter().zip(dir).map(|(a, d)| a + d * scale).collect()
}

/// Random piecewise-linear curve with knots in the domain; used by the
/// Monte-Carlo sweeps in the test suites.
pub fn random_curve<R: Rng>(
    grid: &Arc<DomainGrid>,
    rng: &mut R,
    segments: usize,
    horizon: f64,
) -> Curve {
    let d = grid.dim();
    let mut times = vec![0.0];
    for i in 1..=segments {
        times.push(horizon * i as f64 / segments as f64);
    }
    let points: Vec<Vec<f64>> = (0..=segments)
        .map(|_| {
            (0..d)
                .map(|a| rng.gen_range(grid.lower()[a]..grid.upper()[a]))
                .collect()
        })
        .collect();
    Curve::new(grid.clone(), times, points).expect("random knots are valid")
}
