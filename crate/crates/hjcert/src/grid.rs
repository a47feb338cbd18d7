//! Uniform rectangular grids on boxes and flat tori.
//!
//! The grid is the discrete stand-in for the state space: a box `[lower, upper]`
//! with clamped boundary, or a torus with periodic identification. All fields,
//! curves and solvers in this crate live on a `DomainGrid`.

use crate::error::{HjError, Result};
use serde::{Deserialize, Serialize};

/// Hard cap on total node count so a typo in a scenario file cannot
/// exhaust memory.
pub const MAX_TOTAL_NODES: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// Closed box; queries and trajectories are clamped at the faces.
    Box,
    /// Flat torus; the upper corner is identified with the lower one.
    Torus,
}

#[derive(Debug, Clone)]
pub struct DomainGrid {
    kind: GridKind,
    lower: Vec<f64>,
    upper: Vec<f64>,
    nodes: Vec<usize>,
    spacing: Vec<f64>,
}

impl DomainGrid {
    /// Builds a grid. Boxes place nodes at both corners (spacing
    /// `(upper-lower)/(n-1)`); tori place `n` nodes on `[lower, upper)`
    /// (spacing `(upper-lower)/n`).
    pub fn build(kind: GridKind, lower: &[f64], upper: &[f64], nodes: &[usize]) -> Result<Self> {
        let d = lower.len();
        if d == 0 || upper.len() != d || nodes.len() != d {
            return Err(HjError::Config(format!(
                "dimension mismatch: lower {}, upper {}, nodes {}",
                lower.len(),
                upper.len(),
                nodes.len()
            )));
        }
        let mut total: usize = 1;
        for axis in 0..d {
            if !(lower[axis] < upper[axis]) {
                return Err(HjError::Config(format!(
                    "axis {axis}: lower {} must be below upper {}",
                    lower[axis], upper[axis]
                )));
            }
            if nodes[axis] < 3 {
                return Err(HjError::Config(format!(
                    "axis {axis}: need at least 3 nodes, got {}",
                    nodes[axis]
                )));
            }
            total = total
                .checked_mul(nodes[axis])
                .filter(|&t| t <= MAX_TOTAL_NODES)
                .ok_or_else(|| {
                    HjError::Resource(format!("total node count exceeds {MAX_TOTAL_NODES}"))
                })?;
        }
        let spacing = (0..d)
            .map(|axis| {
                let span = upper[axis] - lower[axis];
                match kind {
                    GridKind::Box => span / (nodes[axis] - 1) as f64,
                    GridKind::Torus => span / nodes[axis] as f64,
                }
            })
            .collect();
        Ok(DomainGrid {
            kind,
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            nodes: nodes.to_vec(),
            spacing,
        })
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().product()
    }

    /// Geometric center of the box hull.
    pub fn center(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|a| 0.5 * (self.lower[a] + self.upper[a]))
            .collect()
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        debug_assert!(flat < self.node_count());
        let mut rem = flat;
        let mut idx = vec![0usize; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = rem % self.nodes[axis];
            rem /= self.nodes[axis];
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let mut flat = 0usize;
        for axis in 0..self.dim() {
            debug_assert!(multi[axis] < self.nodes[axis]);
            flat = flat * self.nodes[axis] + multi[axis];
        }
        flat
    }

    pub fn point_of_multi(&self, multi: &[usize]) -> Vec<f64> {
        (0..self.dim())
            .map(|a| self.lower[a] + multi[a] as f64 * self.spacing[a])
            .collect()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.point_of_multi(&self.multi_index(flat))
    }

    pub fn iter_points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.node_count()).map(move |i| self.point(i))
    }

    /// Maps an arbitrary point into the domain: clamps to the box faces,
    /// or wraps modulo the period on a torus.
    pub fn canonicalize(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for axis in 0..self.dim() {
            match self.kind {
                GridKind::Box => {
                    out[axis] = out[axis].clamp(self.lower[axis], self.upper[axis]);
                }
                GridKind::Torus => {
                    let period = self.upper[axis] - self.lower[axis];
                    let mut y = (out[axis] - self.lower[axis]).rem_euclid(period);
                    if y >= period {
                        y = 0.0;
                    }
                    out[axis] = self.lower[axis] + y;
                }
            }
        }
        out
    }

    /// Displacement from `from` to `to`; on a torus the per-axis minimal
    /// representative is returned.
    pub fn displacement(&self, from: &[f64], to: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|axis| {
                let raw = to[axis] - from[axis];
                match self.kind {
                    GridKind::Box => raw,
                    GridKind::Torus => {
                        let period = self.upper[axis] - self.lower[axis];
                        let mut d = raw.rem_euclid(period);
                        if d > 0.5 * period {
                            d -= period;
                        }
                        d
                    }
                }
            })
            .collect()
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.displacement(a, b).iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|a| match self.kind {
            GridKind::Box => x[a] >= self.lower[a] - 1e-12 && x[a] <= self.upper[a] + 1e-12,
            GridKind::Torus => true,
        })
    }

    /// Multilinear interpolation of a nodal field at an arbitrary point,
    /// clamped at box faces and wrapped on tori. The weights form a convex
    /// combination, so the interpolant is monotone in the nodal values.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.node_count());
        let d = self.dim();
        let x = self.canonicalize(x);
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0f64; d];
        for axis in 0..d {
            let u = (x[axis] - self.lower[axis]) / self.spacing[axis];
            match self.kind {
                GridKind::Box => {
                    let max_cell = self.nodes[axis] - 2;
                    let i = (u.floor() as isize).clamp(0, max_cell as isize) as usize;
                    base[axis] = i;
                    frac[axis] = (u - i as f64).clamp(0.0, 1.0);
                }
                GridKind::Torus => {
                    let n = self.nodes[axis];
                    let i = u.floor() as isize;
                    base[axis] = i.rem_euclid(n as isize) as usize;
                    frac[axis] = u - u.floor();
                }
            }
        }
        let mut acc = 0.0;
        let corners = 1usize << d;
        let mut multi = vec![0usize; d];
        for corner in 0..corners {
            let mut weight = 1.0;
            for axis in 0..d {
                let hi = (corner >> axis) & 1 == 1;
                let mut idx = base[axis] + if hi { 1 } else { 0 };
                if self.kind == GridKind::Torus {
                    idx %= self.nodes[axis];
                }
                multi[axis] = idx;
                weight *= if hi { frac[axis] } else { 1.0 - frac[axis] };
            }
            if weight != 0.0 {
                acc += weight * values[self.flat_index(&multi)];
            }
        }
        acc
    }

    /// Flat indices of the axis-aligned neighborhood of `flat` within
    /// `radius` cells, including the node itself. Box neighborhoods clamp
    /// at the faces, torus neighborhoods wrap.
    pub fn neighborhood(&self, flat: usize, radius: usize) -> Vec<usize> {
        let d = self.dim();
        let center = self.multi_index(flat);
        let mut out = Vec::new();
        let side = 2 * radius + 1;
        let total = side.pow(d as u32);
        let mut multi = vec![0usize; d];
        for code in 0..total {
            let mut rem = code;
            let mut ok = true;
            for axis in 0..d {
                let off = (rem % side) as isize - radius as isize;
                rem /= side;
                let raw = center[axis] as isize + off;
                let n = self.nodes[axis] as isize;
                let idx = match self.kind {
                    GridKind::Box => {
                        if raw < 0 || raw >= n {
                            ok = false;
                            break;
                        }
                        raw
                    }
                    GridKind::Torus => raw.rem_euclid(n),
                };
                multi[axis] = idx as usize;
            }
            if ok {
                out.push(self.flat_index(&multi));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Samples a scalar function at every node.
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.node_count()).map(|i| f(&self.point(i))).collect()
    }
}
