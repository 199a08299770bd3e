//! Pseudo-spectral solver for time-periodic incompressible Navier-Stokes flow
//! with a constant drift term, on a periodic box.
//!
//! The system solved (viscosity one) is
//!
//! ```text
//! d_t u - Lap u - lambda d_1 u + grad p + u . grad u = f,   div u = 0,
//! ```
//!
//! with `u`, `p` and `f` periodic in space and `T`-periodic in time. Every linear
//! operator acts diagonally on space-time Fourier coefficients, so the solver is
//! a Picard iteration over a bank of mode-wise multipliers plus one dealiased
//! quadratic term.

pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod forcing;
pub mod fourier;
pub mod multipliers;
pub mod nonlinear;
pub mod solver;

pub use domain::{frequencies, make_grid, FreqIndex, Grid, Mode, Params};
pub use error::{Error, Result};
pub use fourier::{apply_projection_p, apply_projection_pperp, forward, inverse, PhysicalField, SpectralField};
