//! Finite pole order of a reciprocal density at a point.
//!
//! The order at `u0` is the least integer `q >= 0` such that
//! `int_{B(u0, eps)} |u - u0|^{2q} / s(u) du` converges. A positive
//! density has order 0; so does a mild zero whose reciprocal is still
//! integrable. Densities like `exp(-1/|u|)` have no finite order at 0.

use serde::Serialize;

use crate::error::{Result, RigidityError};
use crate::spectral::density::SpectralDensity;
use crate::spectral::ladder::{inward_shell_ladder, probe_directions, LadderConfig, LadderVerdict};

/// Tuning for [`finite_pole_order`].
#[derive(Debug, Clone)]
pub struct FiniteOrderConfig {
    /// Ball radius around the probed point.
    pub eps: f64,
    /// Largest weight exponent scanned before giving up.
    pub max_order: u32,
    pub ladder: LadderConfig,
}

impl Default for FiniteOrderConfig {
    fn default() -> Self {
        FiniteOrderConfig {
            eps: 0.4,
            max_order: 8,
            ladder: LadderConfig {
                // direction means converge fast; the full budget is wasteful
                sphere_directions: 128,
                ..LadderConfig::default()
            },
        }
    }
}

/// Result of the order scan at one location.
#[derive(Debug, Clone, Serialize)]
pub struct PoleOrderReport {
    pub location: Vec<f64>,
    /// Least weight exponent with a convergent ladder, `None` when every
    /// scanned exponent still diverges.
    pub order: Option<u32>,
    /// Ladder verdict per scanned exponent, in scan order.
    pub scanned: Vec<(u32, LadderVerdict)>,
    /// True when the scan stopped on a ladder that could not be classified.
    pub undetermined: bool,
}

/// Scan `q = 0, 1, ...` until `int |u - u0|^{2q} / s` converges.
///
/// The weighted reciprocal is reduced to a radial profile by averaging
/// `1/s` over a deterministic direction set, which approximates the true
/// spherical integral (unlike the sup-based majorant of the radial
/// certificate, which is one-sided).
pub fn finite_pole_order(
    s: &SpectralDensity,
    location: &[f64],
    cfg: &FiniteOrderConfig,
) -> Result<PoleOrderReport> {
    let d = s.dim();
    if location.len() != d {
        return Err(RigidityError::InvalidInput(
            "location dimension does not match the density".into(),
        ));
    }
    if !(cfg.eps > 0.0) {
        return Err(RigidityError::InvalidInput("eps must be positive".into()));
    }
    let dirs = probe_directions(d, cfg.ladder.sphere_directions, s.flags().isotropic)?;
    let inv_n = 1.0 / dirs.len() as f64;

    let mut scanned = Vec::new();
    let mut order = None;
    let mut undetermined = false;
    for q in 0..=cfg.max_order {
        let two_q = 2 * q as i32;
        let profile = |rho: f64| {
            let mut mean = 0.0;
            let mut p = vec![0.0; d];
            for v in &dirs {
                for i in 0..d {
                    p[i] = location[i] + rho * v[i];
                }
                let val = s.eval(&p);
                if val <= 0.0 {
                    return f64::INFINITY;
                }
                mean += inv_n / val;
            }
            rho.powi(two_q) * mean
        };
        let ladder = inward_shell_ladder(&profile, d, cfg.eps, &cfg.ladder)?;
        scanned.push((q, ladder.verdict));
        match ladder.verdict {
            LadderVerdict::Convergent => {
                order = Some(q);
                break;
            }
            LadderVerdict::Divergent => {}
            LadderVerdict::Undetermined => {
                undetermined = true;
                break;
            }
        }
    }

    Ok(PoleOrderReport {
        location: location.to_vec(),
        order,
        scanned,
        undetermined,
    })
}
