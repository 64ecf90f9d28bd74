//! Spectral densities, covariance sequences and the Fourier duality between
//! them, plus the shared quadrature and divergence-ladder machinery.

pub mod builtins;
pub mod covariance;
pub mod density;
pub mod domain;
pub mod expr;
pub mod fourier;
pub mod ladder;
pub mod quad;

pub use fourier::{covariance_from_density, density_from_covariance, validate_temperedness};
