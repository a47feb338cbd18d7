//! Scenario files: JSON descriptions of a domain, Hamiltonian, problem and
//! scheme, plus the builders turning them into solver inputs.
//!
//! Unknown keys are rejected. Schema violations report a JSON pointer to the
//! offending location (e.g. `/problem/lambda`).

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::containment::{standard_containment, ContainmentSpec};
use crate::error::{HjError, Result};
use crate::grid::{DomainGrid, GridKind};
use crate::hamiltonian::HamiltonianSpec;
use crate::isaacs::{CostFn, InnerHamiltonianFn, IsaacsSpec};
use crate::value::{default_velocity_set, uniform_velocity_grid};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub domain: DomainBlock,
    pub hamiltonian: HamiltonianBlock,
    #[serde(default)]
    pub containment: ContainmentBlock,
    pub problem: ProblemBlock,
    pub scheme: SchemeBlock,
    #[serde(default)]
    pub certify: CertifyBlock,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    pub kind: DomainKind,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Box,
    Torus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HamiltonianBlock {
    Quadratic {
        p_max: Vec<f64>,
    },
    TransportQuadratic {
        drift: Vec<f64>,
        p_max: Vec<f64>,
    },
    NormType {
        p_max: Vec<f64>,
    },
    Isaacs {
        theta1: Vec<Vec<f64>>,
        theta2: Vec<Vec<f64>>,
        inner: InnerBlock,
        cost: CostBlock,
        p_max: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InnerBlock {
    /// H_{t1 t2}(x, p) = scale |p|^2 / 2, identical for every pair.
    Quadratic {
        #[serde(default = "one")]
        scale: f64,
    },
    /// H_{t1 t2}(x, p) = <a t1 + b t2, p> + scale |p|^2 / 2.
    DriftQuadratic {
        coeff_theta1: f64,
        coeff_theta2: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CostBlock {
    Zero,
    /// I = w1 |t1|_1 + w2 |t2|_1 (separable, nonnegative for w >= 0).
    SeparableAbs { weight1: f64, weight2: f64 },
    /// I = w t1[0] t2[0] + offset (coupled; the offset shifts the cost
    /// nonnegative without changing the sup-inf/inf-sup gap).
    Product {
        weight: f64,
        #[serde(default)]
        offset: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ContainmentBlock {
    /// Trivial on tori, log-quadratic around the grid center on boxes.
    Auto,
    Trivial,
    /// Log-quadratic around an explicit center.
    Custom { center: Vec<f64> },
}

impl Default for ContainmentBlock {
    fn default() -> Self {
        ContainmentBlock::Auto
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Stationary,
    Evolutionary,
}

/// Required fields are optional here so that validation can report exact
/// JSON pointers instead of opaque missing-field errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub kind: ProblemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<FieldExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<FieldExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "expr", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldExpr {
    Constant {
        value: f64,
    },
    /// amplitude * sin(<wavevector, x> + phase)
    Sin {
        #[serde(default = "one")]
        amplitude: f64,
        wavevector: Vec<f64>,
        #[serde(default)]
        phase: f64,
    },
    /// offset + coeff * |x - center|^2
    Quadratic {
        center: Vec<f64>,
        coeff: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Node-indexed values in flat-index order; interpolated off-grid.
    Table {
        values: Vec<f64>,
    },
}

impl FieldExpr {
    pub fn eval(&self, x: &[f64], grid: &DomainGrid) -> f64 {
        match self {
            FieldExpr::Constant { value } => *value,
            FieldExpr::Sin {
                amplitude,
                wavevector,
                phase,
            } => {
                let arg: f64 = wavevector.iter().zip(x).map(|(k, xi)| k * xi).sum();
                amplitude * (arg + phase).sin()
            }
            FieldExpr::Quadratic {
                center,
                coeff,
                offset,
            } => {
                let s: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(xi, ci)| (xi - ci) * (xi - ci))
                    .sum();
                offset + coeff * s
            }
            FieldExpr::Table { values } => grid.interpolate(values, x),
        }
    }

    pub fn tabulate(&self, grid: &DomainGrid) -> Result<Vec<f64>> {
        if let FieldExpr::Table { values } = self {
            if values.len() != grid.node_count() {
                return Err(HjError::Config(format!(
                    "table field has {} values, grid has {} nodes",
                    values.len(),
                    grid.node_count()
                )));
            }
        }
        Ok(grid.iter_points().map(|x| self.eval(&x, grid)).collect())
    }

    pub fn to_fn(&self, grid: Arc<DomainGrid>) -> crate::containment::ScalarFn {
        let expr = self.clone();
        Arc::new(move |x: &[f64]| expr.eval(x, &grid))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeBlock {
    pub tau: f64,
    pub velocity: VelocityBlock,
    #[serde(default = "default_solver_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
}

fn default_solver_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum VelocityBlock {
    Stencil { v_ref: f64 },
    Uniform { v_max: f64, dv: f64 },
    Explicit { vectors: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyBlock {
    pub centers: usize,
    pub curvatures: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub kappa: f64,
    pub radius: usize,
    pub radius_frac: f64,
}

impl Default for CertifyBlock {
    fn default() -> Self {
        CertifyBlock {
            centers: 5,
            curvatures: vec![0.5, 2.0],
            epsilons: vec![0.05, 0.5],
            kappa: 5.0,
            // envelope radius 0: for continuous fields the discrete usc/lsc
            // envelope is the field itself; widening it transplants values
            // across nodes and manufactures spurious optimizers
            radius: 0,
            radius_frac: 0.25,
        }
    }
}

/// Resolved scenario: grid, Hamiltonian and containment built and checked.
pub struct BuiltScenario {
    pub grid: Arc<DomainGrid>,
    pub ham: HamiltonianSpec,
    pub ups: ContainmentSpec,
    pub isaacs: Option<IsaacsSpec>,
    pub velocities: Vec<Vec<f64>>,
}

impl Scenario {
    /// Parses and validates a scenario file. Schema violations carry the
    /// JSON pointer of the offending key.
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        Scenario::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Scenario> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = format!("/{}", e.path().to_string().replace('.', "/"));
            HjError::Config(format!("schema violation at {pointer}: {}", e.inner()))
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.domain.lower.len();
        if self.domain.upper.len() != d || self.domain.nodes.len() != d {
            return Err(HjError::Config(
                "schema violation at /domain: lower/upper/nodes lengths differ".into(),
            ));
        }
        match self.problem.kind {
            ProblemKind::Stationary => {
                let lambda = self.problem.lambda.ok_or_else(|| {
                    HjError::Config("schema violation at /problem/lambda: missing".into())
                })?;
                if !(lambda > 0.0) {
                    return Err(HjError::Config(format!(
                        "schema violation at /problem/lambda: {lambda} must be > 0"
                    )));
                }
                if self.problem.h.is_none() {
                    return Err(HjError::Config(
                        "schema violation at /problem/h: missing".into(),
                    ));
                }
            }
            ProblemKind::Evolutionary => {
                let lambda = self.problem.lambda.ok_or_else(|| {
                    HjError::Config("schema violation at /problem/lambda: missing".into())
                })?;
                if lambda < 0.0 {
                    return Err(HjError::Config(format!(
                        "schema violation at /problem/lambda: {lambda} must be >= 0"
                    )));
                }
                if self.problem.u0.is_none() {
                    return Err(HjError::Config(
                        "schema violation at /problem/u0: missing".into(),
                    ));
                }
                match self.problem.horizon {
                    None => {
                        return Err(HjError::Config(
                            "schema violation at /problem/horizon: missing".into(),
                        ))
                    }
                    Some(t) if !(t > 0.0) => {
                        return Err(HjError::Config(format!(
                            "schema violation at /problem/horizon: {t} must be > 0"
                        )))
                    }
                    _ => {}
                }
            }
        }
        if !(self.scheme.tau > 0.0) {
            return Err(HjError::Config(
                "schema violation at /scheme/tau: must be > 0".into(),
            ));
        }
        if !(self.scheme.tol > 0.0) {
            return Err(HjError::Config(
                "schema violation at /scheme/tol: must be > 0".into(),
            ));
        }
        if self.certify.kappa < 1.0 {
            return Err(HjError::Config(
                "schema violation at /certify/kappa: must be >= 1".into(),
            ));
        }
        match &self.scheme.velocity {
            VelocityBlock::Stencil { v_ref } if !(*v_ref > 0.0) => {
                return Err(HjError::Config(
                    "schema violation at /scheme/velocity/v_ref: must be > 0".into(),
                ))
            }
            VelocityBlock::Uniform { v_max, dv } if !(*v_max > 0.0 && *dv > 0.0) => {
                return Err(HjError::Config(
                    "schema violation at /scheme/velocity: v_max and dv must be > 0".into(),
                ))
            }
            VelocityBlock::Explicit { vectors } if vectors.is_empty() => {
                return Err(HjError::Config(
                    "schema violation at /scheme/velocity/vectors: empty".into(),
                ))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn build(&self) -> Result<BuiltScenario> {
        let kind = match self.domain.kind {
            DomainKind::Box => GridKind::Box,
            DomainKind::Torus => GridKind::Torus,
        };
        let grid = Arc::new(DomainGrid::build(
            kind,
            &self.domain.lower,
            &self.domain.upper,
            &self.domain.nodes,
        )?);

        let (ham, isaacs) = match &self.hamiltonian {
            HamiltonianBlock::Quadratic { p_max } => {
                (HamiltonianSpec::quadratic(&grid, p_max.clone())?, None)
            }
            HamiltonianBlock::TransportQuadratic { drift, p_max } => {
                let b = drift.clone();
                let drift_fn: crate::hamiltonian::DriftFn = Arc::new(move |_x: &[f64]| b.clone());
                (
                    HamiltonianSpec::transport_quadratic(&grid, p_max.clone(), drift_fn)?,
                    None,
                )
            }
            HamiltonianBlock::NormType { p_max } => {
                (HamiltonianSpec::norm_type(&grid, p_max.clone())?, None)
            }
            HamiltonianBlock::Isaacs {
                theta1,
                theta2,
                inner,
                cost,
                p_max,
            } => {
                let spec = build_isaacs(&grid, theta1, theta2, inner, cost, p_max)?;
                let ham = spec.to_hamiltonian(&grid)?;
                (ham, Some(spec))
            }
        };

        let ups = match &self.containment {
            ContainmentBlock::Trivial => ContainmentSpec::trivial(grid.dim()),
            ContainmentBlock::Auto => standard_containment(&grid, &ham)?,
            ContainmentBlock::Custom { center } => {
                custom_containment(&grid, &ham, center.clone())?
            }
        };
        if let Some(spec) = &isaacs {
            spec.validate(&grid, &ups)?;
        }

        let velocities = match &self.scheme.velocity {
            VelocityBlock::Stencil { v_ref } => default_velocity_set(grid.dim(), *v_ref),
            VelocityBlock::Uniform { v_max, dv } => uniform_velocity_grid(grid.dim(), *v_max, *dv),
            VelocityBlock::Explicit { vectors } => vectors.clone(),
        };

        Ok(BuiltScenario {
            grid,
            ham,
            ups,
            isaacs,
            velocities,
        })
    }

    /// Builds only the grid and the game spec, skipping the composite
    /// Hamiltonian. Gap diagnostics stay available for games whose composite
    /// violates H(x, 0) = 0 and therefore cannot drive the solvers.
    pub fn build_game(&self) -> Result<(Arc<DomainGrid>, IsaacsSpec)> {
        let kind = match self.domain.kind {
            DomainKind::Box => GridKind::Box,
            DomainKind::Torus => GridKind::Torus,
        };
        let grid = Arc::new(DomainGrid::build(
            kind,
            &self.domain.lower,
            &self.domain.upper,
            &self.domain.nodes,
        )?);
        let HamiltonianBlock::Isaacs {
            theta1,
            theta2,
            inner,
            cost,
            p_max,
        } = &self.hamiltonian
        else {
            return Err(HjError::Config(
                "scenario's hamiltonian variant is not \"isaacs\"".into(),
            ));
        };
        let spec = build_isaacs(&grid, theta1, theta2, inner, cost, p_max)?;
        Ok((grid, spec))
    }

    /// Certification tolerance law: kappa * (max grid spacing + tau).
    pub fn certify_tol(&self, grid: &DomainGrid) -> f64 {
        self.certify.kappa * (grid.max_spacing() + self.scheme.tau)
    }
}

fn custom_containment(
    grid: &DomainGrid,
    ham: &HamiltonianSpec,
    center: Vec<f64>,
) -> Result<ContainmentSpec> {
    if center.len() != grid.dim() {
        return Err(HjError::Config(
            "schema violation at /containment/center: dimension mismatch".into(),
        ));
    }
    let c = center.clone();
    let ups: crate::containment::ScalarFn = Arc::new(move |x: &[f64]| {
        let s: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
        0.5 * (1.0 + s).ln()
    });
    let c2 = center;
    let dups: crate::containment::CovectorFn = Arc::new(move |x: &[f64]| {
        let s: f64 = x.iter().zip(&c2).map(|(a, b)| (a - b) * (a - b)).sum();
        x.iter().zip(&c2).map(|(a, b)| (a - b) / (1.0 + s)).collect()
    });
    let bound = grid
        .iter_points()
        .map(|x| ham.eval(&x, &dups(&x)))
        .fold(f64::NEG_INFINITY, f64::max)
        + crate::containment::CONTAINMENT_MARGIN;
    let spec = ContainmentSpec::new(ups, dups, bound, true);
    spec.check_certified(grid, ham)?;
    Ok(spec)
}

fn build_isaacs(
    grid: &DomainGrid,
    theta1: &[Vec<f64>],
    theta2: &[Vec<f64>],
    inner: &InnerBlock,
    cost: &CostBlock,
    p_max: &[f64],
) -> Result<IsaacsSpec> {
    let (inner_fn, shared): (InnerHamiltonianFn, Option<HamiltonianSpec>) = match inner {
        InnerBlock::Quadratic { scale } => {
            let s = *scale;
            let f: InnerHamiltonianFn = Arc::new(move |_x, p, _t1, _t2| {
                0.5 * s * p.iter().map(|v| v * v).sum::<f64>()
            });
            let eval: crate::hamiltonian::EvalFn =
                Arc::new(move |_x, p| 0.5 * s * p.iter().map(|v| v * v).sum::<f64>());
            let conj: crate::hamiltonian::ConjugateFn = Arc::new(move |_x, v| {
                // conjugate of s|p|^2/2 is |v|^2/(2s) at p = v/s
                let p: Vec<f64> = v.iter().map(|w| w / s).collect();
                (0.5 / s * v.iter().map(|w| w * w).sum::<f64>(), p)
            });
            let grad: crate::hamiltonian::GradFn =
                Arc::new(move |_x, p| p.iter().map(|q| s * q).collect());
            let shared = HamiltonianSpec::new(
                grid,
                crate::hamiltonian::HamiltonianVariant::Quadratic,
                true,
                p_max.to_vec(),
                eval,
                Some(conj),
                Some(grad),
            )?;
            (f, Some(shared))
        }
        InnerBlock::DriftQuadratic {
            coeff_theta1,
            coeff_theta2,
            scale,
        } => {
            let (a, b, s) = (*coeff_theta1, *coeff_theta2, *scale);
            let f: InnerHamiltonianFn = Arc::new(move |_x, p, t1, t2| {
                let drift: f64 = p
                    .iter()
                    .enumerate()
                    .map(|(i, pi)| {
                        (a * t1.get(i).copied().unwrap_or(0.0)
                            + b * t2.get(i).copied().unwrap_or(0.0))
                            * pi
                    })
                    .sum();
                drift + 0.5 * s * p.iter().map(|v| v * v).sum::<f64>()
            });
            // p-dependence is strategy-dependent: no shared inner
            (f, None)
        }
    };
    let cost_fn: CostFn = match cost {
        CostBlock::Zero => Arc::new(|_x, _t1, _t2| 0.0),
        CostBlock::SeparableAbs { weight1, weight2 } => {
            let (w1, w2) = (*weight1, *weight2);
            Arc::new(move |_x, t1, t2| {
                w1 * t1.iter().map(|v| v.abs()).sum::<f64>()
                    + w2 * t2.iter().map(|v| v.abs()).sum::<f64>()
            })
        }
        CostBlock::Product { weight, offset } => {
            let (w, c) = (*weight, *offset);
            Arc::new(move |_x, t1, t2| w * t1[0] * t2[0] + c)
        }
    };
    let separable = matches!(
        (inner, cost),
        (InnerBlock::Quadratic { .. }, _) | (_, CostBlock::Zero) | (_, CostBlock::SeparableAbs { .. })
    ) && !matches!(cost, CostBlock::Product { .. });
    IsaacsSpec::new(
        theta1.to_vec(),
        theta2.to_vec(),
        inner_fn,
        cost_fn,
        separable,
        p_max.to_vec(),
        shared,
    )
}
