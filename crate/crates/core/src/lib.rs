//! Charging of an open quantum battery made of two coupled bosonic modes.
//!
//! A charger mode `a` is damped by a thermal bath and driven by a coherent
//! field; a battery mode `b` exchanges quanta with the charger through a
//! beam-splitter coupling that is switched on during `[0, tau]`. The crate
//! provides three independent routes to the battery state:
//!
//! * [`dynamics`]: first and second moment equations integrated with RK4
//!   (the production path),
//! * [`analytic`]: closed-form zero-temperature coherent amplitudes,
//! * [`oracle`]: brute-force density-matrix propagation in a truncated Fock
//!   space.
//!
//! [`energetics`] turns moments into stored energy and ergotropy, and
//! [`cd_control`] synthesizes the counterdiabatic drive used for charging as
//! well as the closed-system transitionless driving Hamiltonian.
//!
//! Units: `hbar = 1`, frequencies and energies in units of `omega0`, times in
//! units of `1 / omega0`. All dynamics are written in the interaction picture
//! with respect to the free oscillator Hamiltonians.

// `!(x > 0.0)` style guards are used so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cd_control;
pub mod dynamics;
pub mod energetics;
mod error;
pub mod integrator;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
