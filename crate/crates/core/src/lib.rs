//! Numerical laboratory for continuity equations on a separable Hilbert space
//! `H = L²(0,1)` carrying a Gaussian or Gibbs reference measure.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectral`]: Dirichlet sine basis, quadrature grids, synthesis/projection.
//! - [`measures`]: Gaussian and Gibbs measures, logarithmic derivatives, the
//!   finite-dimensional disintegration density and its clip/mollify ladder.
//! - [`fields`]: cylindrical vector fields, divergences and the adjoint `D*`.
//! - [`transport`]: characteristic flows and the Feynman–Kac representation of
//!   the density solving `D_t ρ = -D*(ρF)`.
//! - [`verify`]: weak-form residuals, mass and entropy audits, uniqueness probes.
//! - [`spde`]: the stochastic reaction–diffusion companion (Yosida drift,
//!   derivative flow, Bismut–Elworthy–Li gradients, commutator decay, BDG).
//!
//! Every Monte Carlo routine takes an explicit root seed; per-item random
//! streams are derived deterministically (see [`rng`]), so results do not
//! depend on the number of worker threads.

pub mod error;
pub mod fields;
pub mod functions;
pub mod measures;
pub mod rng;
pub mod spde;
pub mod spectral;
pub mod stats;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
