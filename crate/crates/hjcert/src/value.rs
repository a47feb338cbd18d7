//! Semi-Lagrangian computation of the value functions.
//!
//! The stationary scheme iterates the discount-weighted update
//!   R(x) <- max_v [(1 - beta)(h(x) - lambda L(x, v)) + beta R~(x + tau v)],
//! beta = exp(-tau / lambda), which is a beta-contraction in sup norm; its
//! formal tau -> 0 expansion recovers u - lambda H(x, Du) = h. The
//! evolutionary scheme is the one-step layer recursion
//!   v(x, t+tau) = max_v [-tau L(x, v) + exp(-lambda tau) v~(x + tau v, t)].
//! R~ / v~ is multilinear interpolation, clamped at box faces and wrapped on
//! tori, so the update is monotone.

use std::sync::Arc;

use crate::error::{HjError, Result};
use crate::grid::DomainGrid;
use crate::hamiltonian::HamiltonianSpec;
use crate::legendre::conjugate;

#[derive(Debug, Clone)]
pub struct ValueField {
    pub grid: Arc<DomainGrid>,
    pub values: Vec<f64>,
    pub lambda: f64,
    pub tau: f64,
    pub velocities: Vec<Vec<f64>>,
    pub iterations: usize,
    pub final_update: f64,
}

#[derive(Debug, Clone)]
pub struct TimeValueField {
    pub grid: Arc<DomainGrid>,
    /// Layer times 0 = t_0 < ... < t_N = T with uniform step tau.
    pub times: Vec<f64>,
    /// One nodal field per layer.
    pub layers: Vec<Vec<f64>>,
    pub lambda: f64,
    pub tau: f64,
    pub velocities: Vec<Vec<f64>>,
}

impl TimeValueField {
    pub fn layer(&self, k: usize) -> &[f64] {
        &self.layers[k]
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// Precomputed one-step stationary update.
pub struct StationaryScheme {
    grid: Arc<DomainGrid>,
    h_values: Vec<f64>,
    lambda: f64,
    tau: f64,
    beta: f64,
    velocities: Vec<Vec<f64>>,
    /// lagrangian[j * nodes + i] = L(x_i, v_j); +inf marks inadmissible moves.
    lagrangian: Vec<f64>,
    /// foot[j][i] = x_i + tau v_j.
    feet: Vec<Vec<Vec<f64>>>,
}

impl StationaryScheme {
    pub fn new(
        ham: &HamiltonianSpec,
        grid: Arc<DomainGrid>,
        lambda: f64,
        h_values: Vec<f64>,
        tau: f64,
        velocities: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !(lambda > 0.0) || !(tau > 0.0) {
            return Err(HjError::Parameter(
                "stationary scheme needs lambda > 0 and tau > 0".into(),
            ));
        }
        if h_values.len() != grid.node_count() {
            return Err(HjError::Parameter("h field size mismatch".into()));
        }
        if !velocities
            .iter()
            .any(|v| v.iter().all(|&c| c == 0.0))
        {
            return Err(HjError::Parameter("velocity set must contain 0".into()));
        }
        let (lagrangian, feet) = tabulate(ham, &grid, tau, &velocities)?;
        let beta = (-tau / lambda).exp();
        Ok(StationaryScheme {
            grid,
            h_values,
            lambda,
            tau,
            beta,
            velocities,
            lagrangian,
            feet,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// One Jacobi sweep over all nodes.
    pub fn sweep(&self, current: &[f64]) -> Vec<f64> {
        let n = self.grid.node_count();
        let mut next = vec![f64::NEG_INFINITY; n];
        for i in 0..n {
            let mut best = f64::NEG_INFINITY;
            for j in 0..self.velocities.len() {
                let l = self.lagrangian[j * n + i];
                if l.is_infinite() {
                    continue;
                }
                let cont = self.grid.interpolate(current, &self.feet[j][i]);
                let cand =
                    (1.0 - self.beta) * (self.h_values[i] - self.lambda * l) + self.beta * cont;
                if cand > best {
                    best = cand;
                }
            }
            next[i] = best;
        }
        next
    }

    pub fn solve(&self, tol: f64, max_iters: usize) -> Result<ValueField> {
        let mut values = self.h_values.clone();
        let mut update = f64::INFINITY;
        for iter in 1..=max_iters {
            let next = self.sweep(&values);
            if next.iter().any(|v| v.is_infinite()) {
                return Err(HjError::Scheme(
                    "all velocities inadmissible at some node".into(),
                ));
            }
            update = values
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            values = next;
            if update <= tol {
                return Ok(ValueField {
                    grid: self.grid.clone(),
                    values,
                    lambda: self.lambda,
                    tau: self.tau,
                    velocities: self.velocities.clone(),
                    iterations: iter,
                    final_update: update,
                });
            }
        }
        Err(HjError::NonConvergence {
            last_update: update,
            iterations: max_iters,
        })
    }

    /// Field after exactly `sweeps` sweeps from the h initialization,
    /// without the convergence check. Diagnostic use.
    pub fn run_sweeps(&self, sweeps: usize) -> ValueField {
        let mut values = self.h_values.clone();
        for _ in 0..sweeps {
            values = self.sweep(&values);
        }
        ValueField {
            grid: self.grid.clone(),
            values,
            lambda: self.lambda,
            tau: self.tau,
            velocities: self.velocities.clone(),
            iterations: sweeps,
            final_update: f64::INFINITY,
        }
    }
}

pub fn solve_stationary(
    ham: &HamiltonianSpec,
    grid: Arc<DomainGrid>,
    lambda: f64,
    h_values: Vec<f64>,
    tau: f64,
    velocities: Vec<Vec<f64>>,
    tol: f64,
    max_iters: usize,
) -> Result<ValueField> {
    StationaryScheme::new(ham, grid, lambda, h_values, tau, velocities)?.solve(tol, max_iters)
}

/// Default iteration cap 10 * ceil(1 / (1 - beta)).
pub fn default_max_iters(lambda: f64, tau: f64) -> usize {
    let beta = (-tau / lambda).exp();
    (10.0 * (1.0 / (1.0 - beta)).ceil()) as usize + 10
}

pub fn solve_evolutionary(
    ham: &HamiltonianSpec,
    grid: Arc<DomainGrid>,
    lambda: f64,
    u0_values: Vec<f64>,
    t_end: f64,
    tau: f64,
    velocities: Vec<Vec<f64>>,
) -> Result<TimeValueField> {
    if lambda < 0.0 || !(tau > 0.0) {
        return Err(HjError::Parameter(
            "evolutionary scheme needs lambda >= 0 and tau > 0".into(),
        ));
    }
    let n_steps = (t_end / tau).round() as usize;
    if n_steps == 0 || ((n_steps as f64 * tau) - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(HjError::Parameter(format!(
            "horizon {t_end} is not an integer multiple of tau {tau}"
        )));
    }
    if u0_values.len() != grid.node_count() {
        return Err(HjError::Parameter("u0 field size mismatch".into()));
    }
    let (lagrangian, feet) = tabulate(ham, &grid, tau, &velocities)?;
    let discount = (-lambda * tau).exp();
    let n = grid.node_count();

    let mut layers = Vec::with_capacity(n_steps + 1);
    let mut times = Vec::with_capacity(n_steps + 1);
    layers.push(u0_values);
    times.push(0.0);
    for k in 0..n_steps {
        let prev = &layers[k];
        let mut next = vec![f64::NEG_INFINITY; n];
        for i in 0..n {
            let mut best = f64::NEG_INFINITY;
            for j in 0..velocities.len() {
                let l = lagrangian[j * n + i];
                if l.is_infinite() {
                    continue;
                }
                let cand = -tau * l + discount * grid.interpolate(prev, &feet[j][i]);
                if cand > best {
                    best = cand;
                }
            }
            if best.is_infinite() {
                return Err(HjError::Scheme(
                    "all velocities inadmissible at some node".into(),
                ));
            }
            next[i] = best;
        }
        layers.push(next);
        times.push((k + 1) as f64 * tau);
    }
    Ok(TimeValueField {
        grid,
        times,
        layers,
        lambda,
        tau,
        velocities,
    })
}

fn tabulate(
    ham: &HamiltonianSpec,
    grid: &DomainGrid,
    tau: f64,
    velocities: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<Vec<Vec<f64>>>)> {
    if velocities.is_empty() {
        return Err(HjError::Parameter("empty velocity set".into()));
    }
    let n = grid.node_count();
    let mut lagrangian = vec![0.0; velocities.len() * n];
    let mut feet = Vec::with_capacity(velocities.len());
    for (j, v) in velocities.iter().enumerate() {
        if v.len() != grid.dim() {
            return Err(HjError::Parameter("velocity dimension mismatch".into()));
        }
        let mut foot_j = Vec::with_capacity(n);
        for i in 0..n {
            let x = grid.point(i);
            lagrangian[j * n + i] = conjugate(ham, &x, v).value;
            let foot: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + tau * b).collect();
            foot_j.push(grid.canonicalize(&foot));
        }
        feet.push(foot_j);
    }
    Ok((lagrangian, feet))
}

/// Brute-force Hopf-Lax evaluation for state-independent convex Hamiltonians
/// at lambda = 0: max over grid nodes y of u0(y) - t L((y - x) / t).
pub fn hopf_lax(
    grid: &DomainGrid,
    u0_values: &[f64],
    lagrangian: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    t: f64,
) -> f64 {
    assert!(t > 0.0, "hopf_lax needs t > 0");
    let mut best = f64::NEG_INFINITY;
    for (i, y) in grid.iter_points().enumerate() {
        let v: Vec<f64> = grid.displacement(x, &y).into_iter().map(|d| d / t).collect();
        let l = lagrangian(&v);
        if l.is_infinite() {
            continue;
        }
        best = best.max(u0_values[i] - t * l);
    }
    best
}

/// Discrete upper semicontinuous envelope: morphological max over the
/// `radius`-cell neighborhood of each node.
pub fn usc_regularize(grid: &DomainGrid, values: &[f64], radius: usize) -> Vec<f64> {
    morphological(grid, values, radius, f64::max)
}

/// Discrete lower semicontinuous envelope: morphological min.
pub fn lsc_regularize(grid: &DomainGrid, values: &[f64], radius: usize) -> Vec<f64> {
    morphological(grid, values, radius, f64::min)
}

fn morphological(
    grid: &DomainGrid,
    values: &[f64],
    radius: usize,
    combine: fn(f64, f64) -> f64,
) -> Vec<f64> {
    (0..grid.node_count())
        .map(|i| {
            grid.neighborhood(i, radius)
                .into_iter()
                .map(|j| values[j])
                .fold(values[i], combine)
        })
        .collect()
}

/// Residual of the dynamic programming principle at horizon `t_test`,
/// restricted to one-segment curves x + t v over the scheme's velocity set.
/// Returns RHS - R(x) per node.
pub fn dpp_residual(
    ham: &HamiltonianSpec,
    field: &ValueField,
    h_values: &[f64],
    t_test: f64,
    quad_dt: f64,
) -> Vec<f64> {
    let grid = &field.grid;
    let lambda = field.lambda;
    let n = grid.node_count();
    let n_sub = ((t_test / quad_dt).ceil() as usize).max(1);
    let sub = t_test / n_sub as f64;
    (0..n)
        .map(|i| {
            let x = grid.point(i);
            let mut best = f64::NEG_INFINITY;
            for v in &field.velocities {
                let l = conjugate(ham, &x, v).value;
                if l.is_infinite() {
                    continue;
                }
                let mut integral = 0.0;
                for k in 0..n_sub {
                    let t0 = k as f64 * sub;
                    let t = t0 + 0.5 * sub;
                    let pos: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + t * b).collect();
                    let h_here = grid.interpolate(h_values, &pos);
                    // exact discount-kernel weight, midpoint integrand
                    let weight = (-t0 / lambda).exp() - (-(t0 + sub) / lambda).exp();
                    integral += weight * (h_here - t * l);
                }
                let foot: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + t_test * b).collect();
                let cont = (-t_test / lambda).exp() * grid.interpolate(&field.values, &foot);
                best = best.max(integral + cont);
            }
            best - field.values[i]
        })
        .collect()
}

/// Velocity stencil: 0, then +-(axis unit) scaled by {1/4, 1/2, 1, 2} v_ref,
/// plus the scaled diagonal combinations in 2D.
pub fn default_velocity_set(dim: usize, v_ref: f64) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; dim]];
    let scales = [0.25, 0.5, 1.0, 2.0];
    for axis in 0..dim {
        for &s in &scales {
            for sign in [-1.0, 1.0] {
                let mut v = vec![0.0; dim];
                v[axis] = sign * s * v_ref;
                out.push(v);
            }
        }
    }
    if dim == 2 {
        let inv = 1.0 / 2.0f64.sqrt();
        for &s in &scales {
            for sx in [-1.0, 1.0] {
                for sy in [-1.0, 1.0] {
                    out.push(vec![sx * s * v_ref * inv, sy * s * v_ref * inv]);
                }
            }
        }
    }
    out
}

/// Uniform 1D-per-axis velocity grid (tensor product), step `dv`, covering
/// [-v_max, v_max] per axis. Used for refinement studies.
pub fn uniform_velocity_grid(dim: usize, v_max: f64, dv: f64) -> Vec<Vec<f64>> {
    let per_axis: Vec<f64> = {
        let n = (v_max / dv).floor() as i64;
        (-n..=n).map(|k| k as f64 * dv).collect()
    };
    let mut out = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(out.len() * per_axis.len());
        for prefix in &out {
            for &c in &per_axis {
                let mut v = prefix.clone();
                v.push(c);
                next.push(v);
            }
        }
        out = next;
    }
    out
}
