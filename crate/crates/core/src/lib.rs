//! Simulation of deterministic EPR photon-pair emission from a single
//! F = 1 → F' = 1 atom traversing a two-polarization-mode optical cavity.
//!
//! The protocol has three stages. An atom prepared in |e_0⟩ decays inside the
//! cavity, emitting one photon into an entangled superposition of the left-
//! and right-circular cavity modes (stage 1). A π-polarized pump pulse then
//! re-excites the atom (stage 2), which emits a second, oppositely polarized
//! photon (stage 3). Which-path interference across the two Zeeman branches
//! leaves the two emitted photons in the polarization singlet.
//!
//! Three solvers cover the same dynamics at different levels of rigor:
//!
//! * [`master`] — Lindblad density-matrix evolution with cavity loss and
//!   spontaneous emission (the reference solver);
//! * [`effective`] — pure-state evolution under the non-Hermitian effective
//!   Hamiltonian with an explicit two-branch handoff at the pump start;
//! * [`analytic`] — piecewise closed forms built from the characteristic
//!   polynomials of the three stage ODE systems.
//!
//! All quantities are dimensionless: rates in units of the stage-1 vacuum
//! Rabi coupling, times in its inverse.

pub mod analytic;
pub mod checks;
pub mod dynamics;
pub mod effective;
pub mod entanglement;
pub mod error;
pub mod hilbert;
pub mod master;
pub mod roots;
pub mod series;

mod stepper;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix used for all operators and density matrices.
pub type CMat = DMatrix<Complex64>;
/// Dense complex vector used for pure states.
pub type CVec = DVector<Complex64>;

pub use error::{Error, Result};
