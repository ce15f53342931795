//! Robust Kalman filtering under heavy-tailed measurement noise.
//!
//! The centerpiece is a variational-Bayes filter whose measurement noise is
//! sub-Gaussian alpha-stable (SGαS): `v = sqrt(lambda) * N(0, R)` with
//! `lambda` drawn from a positive stable law. Each time step iterates a
//! Gaussian state update, an inverse-Wishart update of `R`, and an estimate
//! of `E[1/lambda]` produced by one of four estimators (importance sampling,
//! Gauss–Laguerre quadrature, and the Gamma-series hybrids GSIS/GSGL).
//!
//! Modules:
//! - [`stable`]: sampling and density of the mixing law.
//! - [`scale`]: the scale-function estimators and closed-form benchmark means.
//! - [`filter`]: the fixed-point filter step and its building blocks.
//! - [`tracking`]: constant-velocity scenarios and Monte Carlo evaluation.

mod error;
pub mod filter;
pub mod quad;
pub mod scale;
pub mod special;
pub mod stable;
pub mod tracking;

pub use error::{Error, Result};
