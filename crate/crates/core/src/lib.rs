//! Near-adiabatic quenches across quantum phase transitions in finite
//! qubit networks.
//!
//! Three models are covered, each in its symmetry-reduced basis:
//!
//! * the transverse-field Ising chain, split into independent 2×2 momentum
//!   blocks,
//! * the Lipkin-Meshkov-Glick model in the even-parity, maximum-spin sector
//!   (a symmetric tridiagonal matrix),
//! * the resonant Dicke model in a parity-adapted displaced-Fock basis.
//!
//! A sweep of the coupling `λ` from `-1` to `+1` is diagonalized on a grid
//! ([`spectral`]), the state is evolved either directly or in the
//! instantaneous eigenbasis ([`dynamics`]), heating and ground-state fidelity
//! are recorded ([`observables`]), and finite-size scaling is analysed in the
//! collapsing variables `x = N^{1/ν} λ` and `Λ = N υ^μ` ([`scaling`]).
//! [`run`] wires everything into config-driven batch runs.

// `!(a < b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod interp;
pub mod linalg;
pub mod models;
pub mod observables;
pub mod ode;
pub mod run;
pub mod scaling;
pub mod schedule;
pub mod spectral;

pub use error::{Error, Result};
pub use models::{ModelKind, ModelSpec};
pub use schedule::{AnnealingSchedule, ScalingExponents};
