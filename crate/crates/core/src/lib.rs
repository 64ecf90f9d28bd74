//! Spectral classification of linear rigidity for stationary random measures
//! and discrete (lattice) processes.
//!
//! The crate is organized around the spectral density `s` of a stationary
//! process, with the variance identity
//!
//! ```text
//! Var(X(gamma)) = integral |gamma_hat(u)|^2 s(u) du  + atom terms,
//! gamma_hat(u)  = sum_m gamma(m) exp(-i m . u).
//! ```
//!
//! Under this convention the density recovered from a summable covariance is
//! `s(u) = (2 pi)^{-d} sum_m C(m) cos(m . u)`, so white noise (`C = {0 -> 1}`)
//! has `s = (2 pi)^{-d}`.
//!
//! Modules:
//! - [`spectral`]: densities, covariances, the Fourier duality between them,
//!   quadrature and divergence ladders.
//! - [`poles`]: inverse-density divergence tests (radial and Gram-matrix
//!   based), finite pole orders, and the rigidity classifier.
//! - [`predictor`]: optimal linear prediction from an annulus of lattice
//!   sites, residual-variance curves, and exact discrete rigidity tests in
//!   one dimension.
//! - [`dpp`]: determinantal kernels, their structure factors and rigidity
//!   order.
//! - [`sampler`]: Gaussian simulation by circulant embedding and empirical
//!   calibration of predicted residuals.
//! - [`io`]: JSON/CSV external formats shared with the command line tool.

pub mod error;
pub mod index;
pub mod spectral;
pub mod poles;
pub mod predictor;
pub mod dpp;
pub mod sampler;
pub mod io;

pub use error::RigidityError;
pub use index::MultiIndex;
pub use spectral::covariance::{CovarianceSequence, TailSpec};
pub use spectral::density::{Atom, DensityFlags, SpectralDensity, ZeroAnnotation};
pub use spectral::domain::Domain;
