//! Spectral densities: the continuous part of a spectral measure, plus
//! optional atoms and zero annotations.

use crate::error::{Result, RigidityError};
use crate::spectral::domain::Domain;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Structural flags a caller may declare about a density. The classifier
/// only applies converse (necessity) results when the corresponding flag is
/// set; flags are validated where cheap checks exist but are ultimately the
/// caller's claim.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityFlags {
    /// `s(u)` depends only on `|u|`.
    pub isotropic: bool,
    /// `s(u) = s_1(u_1) ... s_d(u_d)`.
    pub separable: bool,
    /// `1/s` has finitely many poles, all of finite order, and `s` is
    /// bounded below by `c (1 + |u|)^{-p}` away from them.
    pub simple: bool,
}

/// A declared zero of the density (pole of `1/s`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroAnnotation {
    pub location: Vec<f64>,
    /// Finite pole order: the least `q` with `int |u - u0|^{2q} / s < inf`
    /// near the zero.
    pub order: u32,
}

/// An atom of the spectral measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Vec<f64>,
    pub mass: f64,
}

/// Spectral density of a stationary process: an even, nonnegative function
/// on the torus `[-pi, pi)^d` or on `R^d`, plus optional atoms.
#[derive(Clone)]
pub struct SpectralDensity {
    domain: Domain,
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    flags: DensityFlags,
    zeros: Vec<ZeroAnnotation>,
    atoms: Vec<Atom>,
    /// Human-readable identifier for reports.
    label: String,
}

impl std::fmt::Debug for SpectralDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralDensity")
            .field("domain", &self.domain)
            .field("label", &self.label)
            .field("flags", &self.flags)
            .field("zeros", &self.zeros)
            .field("atoms", &self.atoms)
            .finish()
    }
}

/// Deterministic sample points for constructor validation: a coarse grid
/// plus golden-ratio offset points, covering the torus cell or a Euclidean
/// box of side 2*radius.
pub(crate) fn validation_points(d: usize, half_side: f64) -> Vec<Vec<f64>> {
    let per_axis = match d {
        1 => 33,
        2 => 9,
        _ => 5,
    };
    let golden = 0.618_033_988_749_894_9_f64;
    let mut pts = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let mut u = Vec::with_capacity(d);
        for (axis, &i) in idx.iter().enumerate() {
            let frac =
                ((i as f64 + 0.5) / per_axis as f64 + golden * (axis as f64 + 1.0)).fract();
            u.push((2.0 * frac - 1.0) * half_side);
        }
        pts.push(u);
        let mut axis = d;
        loop {
            if axis == 0 {
                return pts;
            }
            axis -= 1;
            if idx[axis] + 1 < per_axis {
                idx[axis] += 1;
                for v in idx.iter_mut().skip(axis + 1) {
                    *v = 0;
                }
                break;
            }
        }
    }
}

impl SpectralDensity {
    /// Build a density from a closure, validating nonnegativity and evenness
    /// on a deterministic sample of the domain.
    pub fn new(
        domain: Domain,
        label: impl Into<String>,
        flags: DensityFlags,
        zeros: Vec<ZeroAnnotation>,
        atoms: Vec<Atom>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        domain.validate()?;
        let d = domain.dim();
        for z in &zeros {
            if z.location.len() != d {
                return Err(RigidityError::InvalidInput(
                    "zero annotation dimension mismatch".into(),
                ));
            }
        }
        for a in &atoms {
            if a.location.len() != d {
                return Err(RigidityError::InvalidInput(
                    "atom dimension mismatch".into(),
                ));
            }
            if a.mass < 0.0 {
                return Err(RigidityError::InvalidInput("negative atom mass".into()));
            }
        }

        let half_side = if domain.is_torus() {
            std::f64::consts::PI
        } else {
            8.0
        };
        let mut scale = 0.0f64;
        let pts = validation_points(d, half_side);
        let mut vals = Vec::with_capacity(pts.len());
        for u in &pts {
            let v = eval(u);
            if !v.is_finite() {
                return Err(RigidityError::EvaluationFailure {
                    location: u.clone(),
                    reason: "non-finite density value".into(),
                });
            }
            scale = scale.max(v.abs());
            vals.push(v);
        }
        let floor = -1e-9 * scale.max(1e-300);
        for (u, &v) in pts.iter().zip(&vals) {
            if v < floor {
                return Err(RigidityError::NegativeDensity {
                    location: u.clone(),
                    value: v,
                });
            }
            let neg: Vec<f64> = u.iter().map(|x| -x).collect();
            let w = eval(&neg);
            if (v - w).abs() > 1e-9 * scale.max(1e-300) {
                return Err(RigidityError::InvalidInput(format!(
                    "density is not even at u = {u:?}: s(u) = {v:.6e}, s(-u) = {w:.6e}"
                )));
            }
        }

        let density = SpectralDensity {
            domain,
            eval: Arc::new(eval),
            flags,
            zeros,
            atoms,
            label: label.into(),
        };
        if flags.isotropic {
            density.check_isotropy(scale)?;
        }
        Ok(density)
    }

    fn check_isotropy(&self, scale: f64) -> Result<()> {
        let d = self.domain.dim();
        if d == 1 {
            return Ok(()); // evenness already checked
        }
        let radii = [0.1, 0.4, 0.9, 1.7];
        let dirs = crate::spectral::ladder::direction_set(d, 16)?;
        for &rho in &radii {
            let vals: Vec<f64> = dirs
                .iter()
                .map(|th| {
                    let u: Vec<f64> = th.iter().map(|t| t * rho).collect();
                    (self.eval)(&u)
                })
                .collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > 1e-8 * scale.max(1e-300) {
                return Err(RigidityError::InvalidInput(format!(
                    "density flagged isotropic but varies over the sphere of radius {rho}: [{lo:.6e}, {hi:.6e}]"
                )));
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn flags(&self) -> DensityFlags {
        self.flags
    }

    pub fn zeros(&self) -> &[ZeroAnnotation] {
        &self.zeros
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Evaluate the continuous part at `u`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        (self.eval)(u)
    }

    /// Replace flags (used by pipelines that validate or add claims).
    pub fn with_flags(mut self, flags: DensityFlags) -> Self {
        self.flags = flags;
        self
    }

    /// Replace zero annotations.
    pub fn with_zeros(mut self, zeros: Vec<ZeroAnnotation>) -> Self {
        self.zeros = zeros;
        self
    }

    /// Rescale the continuous part by `factor` (atoms are scaled too).
    pub fn scaled(self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(RigidityError::InvalidInput("bad scale factor".into()));
        }
        let eval = self.eval.clone();
        Ok(SpectralDensity {
            domain: self.domain,
            eval: Arc::new(move |u: &[f64]| factor * (eval)(u)),
            flags: self.flags,
            zeros: self.zeros,
            atoms: self
                .atoms
                .into_iter()
                .map(|a| Atom {
                    location: a.location,
                    mass: a.mass * factor,
                })
                .collect(),
            label: self.label,
        })
    }

    /// Total mass `int s + sum of atoms` over the torus cell; this equals
    /// `C(0)` for discrete processes. Torus domains only.
    pub fn total_mass(&self) -> Result<f64> {
        if !self.domain.is_torus() {
            return Err(RigidityError::InvalidInput(
                "total_mass is defined for torus densities".into(),
            ));
        }
        let d = self.dim();
        let pi = std::f64::consts::PI;
        let lo = vec![-pi; d];
        let hi = vec![pi; d];
        let breaks: Vec<Vec<f64>> = (0..d)
            .map(|axis| self.zeros.iter().map(|z| z.location[axis]).collect())
            .collect();
        let f = |u: &[f64]| self.eval(u);
        let cont = crate::spectral::quad::integrate_box(&f, &lo, &hi, 1e-10, 0.0, &breaks)?;
        let atom_mass: f64 = self.atoms.iter().map(|a| a.mass).sum();
        Ok(cont + atom_mass)
    }

    /// Rescale a torus density so that `C(0) = 1`.
    pub fn normalized_to_unit_mass(self) -> Result<Self> {
        let mass = self.total_mass()?;
        if mass <= 0.0 {
            return Err(RigidityError::InvalidInput(
                "cannot normalize a density with nonpositive mass".into(),
            ));
        }
        self.scaled(1.0 / mass)
    }
}
