//! Desk-scale diagnostics for energy conservation in incompressible flows.
//!
//! The crate computes mollified energy fluxes through the
//! Constantin–E–Titi commutator decomposition, measures Hölder regularity of
//! sampled velocity fields, integrates small pseudo-spectral Navier–Stokes
//! runs and audits their energy budgets, and repeats the flux analysis on a
//! wall-bounded channel using mollification in the wall-parallel variables
//! only.
//!
//! Fields live on uniform lattices. Periodic fields are treated as
//! trigonometric polynomials, so shifts, derivatives and mollification are
//! exact Fourier multipliers and the integral identities hold to round-off
//! plus the error of the one explicit quadrature (the ball average in the
//! commutator remainder).

pub mod budget;
pub mod channel;
pub mod commutator;
pub mod error;
mod fft;
pub mod fields;
pub mod flux;
pub mod holder;
pub mod io;
pub mod mollify;
pub mod quadrature;
pub mod solver;
mod stats;

pub use error::{Error, Result};
pub use fields::{Geometry, Grid, GridField, SpectralField, SynthesisSpec};
pub use mollify::{KernelDim, MollifierKernel};
