//! Euler-Poisson-Makino simulation and weighted fractional Sobolev norms.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`]: radial and Cartesian-box discretizations, finite differences,
//!   resampling and the binary field dump.
//! - [`wsobolev`]: dyadic-shell weighted Sobolev norms and their integer,
//!   `L^2_delta` and weighted-sup relatives.
//! - [`ineq_lab`]: an empirical harness for the nonlinear and embedding
//!   estimates that the norms satisfy.
//! - [`fluid`]: equation of state, Makino variable and flux matrices.
//! - [`poisson`]: free-space Poisson solvers on both geometries.
//! - [`evolution`]: method-of-lines time stepping and the Picard map.
//! - [`diagnostics`]: mass, energy, drift and Gronwall fits.

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod fft;
pub mod field;
pub mod fluid;
pub mod grid;
pub mod ineq_lab;
pub mod poisson;
pub mod quadrature;
pub mod wsobolev;

pub use error::{Error, Result};
