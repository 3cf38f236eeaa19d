//! Simulation toolkit for a quantum-injected optical parametric oscillator
//! that prepares polarization-entangled Schrödinger-cat states of two cavity
//! modes.
//!
//! The crate is organized as two independent computational routes plus the
//! machinery that connects them:
//!
//! - [`phase_space`] / [`gaussian`] — exact Gaussian Wigner-function dynamics
//!   of the three-mode problem (drift/diffusion matrices, propagators, noise
//!   covariances, steady states, stability).
//! - [`fock`] — a truncated Fock-space density-matrix oracle: Lindblad
//!   evolution, conditioning primitives, Wigner evaluation, and operator
//!   moments. Everything the Gaussian layer and the closed forms claim is
//!   cross-checked against this route.
//! - [`conditioning`] — the heralding measurement on the trigger mode and
//!   the assembly of the cat state and its incoherent-mixture reference,
//!   plus the 45°/d± re-expressions and the second conditional measurement.
//! - [`detection`] — photon-number distributions, interference fringes and
//!   visibility, first/second-order coherence, and quadrature marginals.
//! - [`closed_form`] — analytic small-interaction-time results (fringe
//!   formulas, shifted-thermal distribution, the conditioned d₊ Wigner
//!   function, experimental parameter scales).
//!
//! Conventions, fixed globally: quadratures `a = x + i y` with vacuum
//! variance 1/4 per quadrature (vacuum Wigner `(2/π)^n exp(−2|z|²)`), and
//! phase-space ordering `(x₁, y₁, x₂, y₂, …)`.

pub mod closed_form;
pub mod conditioning;
pub mod detection;
mod error;
pub mod fock;
pub mod gaussian;
pub mod linalg;
pub mod phase_space;

pub use error::OpoError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, OpoError>;
