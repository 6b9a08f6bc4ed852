//! Canonical (Hamilton-Jacobi) treatment of singular Lagrangian systems with
//! weakly vanishing Hamiltonian.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! * [`expr`]: symbolic expressions, differentiation, zero testing;
//! * [`legendre`]: momenta, Hessian rank, velocity inversion, time
//!   parametrization;
//! * [`hjpde`]: the constraint set `H'_a = p_a + H_a` and the canonical
//!   Hamiltonian;
//! * [`integrability`]: Poisson brackets, total variations, the consistency
//!   iteration and constraint classification;
//! * [`eom`]: total differential equations of motion, RK4 integration in the
//!   physical time, the canonical action and gauge-independence checks;
//! * [`systems`]: built-in templates and the system file format;
//! * [`quantize`]: grid Schrödinger evolution of one-dimensional systems;
//! * [`verify`]: the end-to-end self-check suite.

// `!(x > 0.0)` is deliberate: NaN must fail these checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eom;
pub mod error;
pub mod expr;
pub mod hjpde;
pub mod integrability;
pub mod legendre;
pub mod quantize;
pub mod systems;
pub mod verify;

pub use error::{Error, Result};
