//! Closed-loop three-state dynamics of chiral molecules.
//!
//! A pump (P) and Stokes (S) Gaussian pulse pair drives the ladder
//! `|1> - |2> - |3>` in the counterintuitive order, while a third field (Q)
//! closes the loop on `|1> - |3>`. The Q coupling differs in sign between
//! left- and right-handed molecules. Shaping Q as the counterdiabatic pulse
//! `Ω_q = 2 dθ/dt` cancels the nonadiabatic coupling for one handedness and
//! doubles it for the other, so at a critical pulse area the two enantiomers
//! end up in different states.
//!
//! The crate is organised bottom-up:
//!
//! * [`pulse`] evaluates the envelopes, mixing angle and Q pulse.
//! * [`hamiltonian`] builds the bare and adiabatic-frame Hamiltonians.
//! * [`linalg`] exponentiates small Hermitian generators.
//! * [`propagator`] integrates the Schrödinger equation.
//! * [`analysis`] runs parameter scans and locates the critical areas.
//! * [`cli`] is the command-line front end.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod propagator;
pub mod pulse;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
