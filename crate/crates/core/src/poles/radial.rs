//! Radial divergence certificate.
//!
//! For a derivative order `k`, build the radial profile
//! `rho^{2|k|} / shat(rho)` where `shat(rho)` is the supremum of the
//! density over a deterministic direction set at radius `rho`, and feed it
//! into the inward dyadic-shell ladder. Since `shat >= s` pointwise, a
//! divergent ladder bounds the true weighted integral from below and is a
//! sound pole certificate; a convergent ladder only says this particular
//! majorant is integrable.

use serde::Serialize;

use super::PoleVerdict;
use crate::error::{Result, RigidityError};
use crate::index::MultiIndex;
use crate::spectral::density::SpectralDensity;
use crate::spectral::ladder::{inward_shell_ladder, probe_directions, LadderConfig, LadderReport, LadderVerdict};

/// Tuning for [`radial_pole_test`].
#[derive(Debug, Clone)]
pub struct RadialConfig {
    /// Outer radius of the shell ladder.
    pub eps: f64,
    pub ladder: LadderConfig,
}

impl Default for RadialConfig {
    fn default() -> Self {
        RadialConfig {
            eps: 0.5,
            ladder: LadderConfig::default(),
        }
    }
}

/// Outcome of the radial certificate at one order.
#[derive(Debug, Clone, Serialize)]
pub struct RadialPoleReport {
    pub location: Vec<f64>,
    pub k: MultiIndex,
    pub eps: f64,
    /// Directions actually sampled (1 for isotropic densities).
    pub directions: usize,
    pub ladder: LadderReport,
    pub verdict: PoleVerdict,
}

/// Test whether `int_{B(loc, eps)} |u - loc|^{2|k|} / s(u) du` diverges,
/// using the direction-sup radial majorant of `s`.
pub fn radial_pole_test(
    s: &SpectralDensity,
    location: &[f64],
    k: &MultiIndex,
    cfg: &RadialConfig,
) -> Result<RadialPoleReport> {
    let d = s.dim();
    if location.len() != d || k.dim() != d {
        return Err(RigidityError::InvalidInput(
            "location/order dimension does not match the density".into(),
        ));
    }
    if !(cfg.eps > 0.0) {
        return Err(RigidityError::InvalidInput("eps must be positive".into()));
    }
    let dirs = probe_directions(d, cfg.ladder.sphere_directions, s.flags().isotropic)?;
    let two_k = 2 * k.total() as i32;
    let profile = |rho: f64| {
        let mut sup = f64::NEG_INFINITY;
        let mut p = vec![0.0; d];
        for v in &dirs {
            for i in 0..d {
                p[i] = location[i] + rho * v[i];
            }
            let val = s.eval(&p);
            if val > sup {
                sup = val;
            }
        }
        if sup <= 0.0 {
            // the density vanishes on the whole shell: infinite contribution
            return f64::INFINITY;
        }
        rho.powi(two_k) / sup
    };
    let ladder = inward_shell_ladder(&profile, d, cfg.eps, &cfg.ladder)?;
    let verdict = match ladder.verdict {
        LadderVerdict::Divergent => PoleVerdict::Pole,
        LadderVerdict::Convergent => PoleVerdict::NoPole,
        LadderVerdict::Undetermined => PoleVerdict::Undetermined,
    };
    Ok(RadialPoleReport {
        location: location.to_vec(),
        k: k.clone(),
        eps: cfg.eps,
        directions: dirs.len(),
        ladder,
        verdict,
    })
}
