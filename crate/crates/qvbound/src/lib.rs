//! Quantitative normal-approximation bounds on Wiener chaos, exactly where
//! the algebra is closed-form and by reproducible Monte Carlo otherwise.
//!
//! The crate has four pillars:
//!
//! * [`chaos`] — exact finite-dimensional Wiener-chaos algebra over R^d:
//!   symmetric kernels, contractions, the multiplication formula, Malliavin
//!   operators, exact moments, and the one- and d-dimensional Stein-type
//!   bounds they produce.
//! * [`stein`] — Hermite polynomials, the solution of the Stein equation
//!   for the standard normal, and empirical Kolmogorov distances.
//! * [`fbm`] — exact Berry-Esseen-type quantities for the quadratic (and
//!   Hermite-power) variation of fractional Brownian motion: increment
//!   correlations, normalizations, Toeplitz-trace fourth cumulants, rate
//!   regimes, and moment-gap constants.
//! * [`simulate`] — exact fractional Gaussian noise by circulant embedding
//!   and a deterministic, thread-count-invariant Monte Carlo engine.
//!
//! The `qvbound` binary wires these into `bound`, `simulate`, `mc-verify`,
//! `tensor-selftest` and `stein-eval` subcommands.

pub mod chaos;
pub mod error;
pub mod fbm;
pub mod report;
pub mod rng;
pub mod simulate;
pub mod special;
pub mod stein;

pub use error::{Error, Result};
