//! Semi-Lagrangian solvers and viscosity-solution certificates for
//! first-order Hamilton-Jacobi problems on boxes and flat tori.
//!
//! The library computes resolvent-style stationary value functions and
//! finite-horizon evolutionary value functions by dynamic programming over a
//! finite velocity set, then certifies the computed fields as approximate
//! viscosity sub/supersolutions by testing perturbed smooth functions whose
//! perturbation is built from a containment function of the domain. Sup-inf
//! and inf-sup composites of finite two-player games plug into the same
//! pipeline through a composite Hamiltonian.

pub mod containment;
pub mod curve;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod isaacs;
pub mod legendre;
pub mod scenario;
pub mod testfn;
pub mod value;
pub mod viscosity;

pub use error::{HjError, Result};
pub use grid::{DomainGrid, GridKind};
pub use hamiltonian::{HamiltonianSpec, HamiltonianVariant};
