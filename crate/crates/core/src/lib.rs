//! Monte Carlo approximation of statistical solutions of the 2D incompressible
//! Euler equations with a spectral hyper-viscosity scheme, plus the diagnostics
//! used to judge convergence: structure functions, energy spectra, Cauchy
//! rates and Wasserstein distances between correlation marginals.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod fft;
pub mod field;
pub mod init;
pub mod presets;
pub mod rng;
pub mod snapshot;
pub mod solver;
pub mod transport;

pub use error::{Error, Result};
pub use field::{ScalarGrid, ScalarSpectralField, SpectralField, VectorGrid};
