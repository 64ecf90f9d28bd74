//! Determinantal kernels and the spectral densities of their counting
//! measures.
//!
//! For a determinantal process with translation-invariant kernel `K` and
//! intensity `lambda = K(0)` the counting measure has
//! `Var N(gamma) = (2 pi)^{-d} int |gamma_hat|^2 (lambda - T(u)) du` where
//! `T` is the Fourier transform of `K^2`, so the spectral density is
//! `s(u) = (2 pi)^{-d} (lambda - T(u))`. The builtin kernels are normalised
//! to unit intensity; each carries its closed-form `T` plus an independent
//! numeric transform used to cross-check it.

use serde::Serialize;
use std::sync::Arc;

use crate::error::{Result, RigidityError};
use crate::index::multi_indices_up_to;
use crate::poles::{
    rigidity_classifier, ClassificationReport, ClassifierConfig, RigidityVerdict,
};
use crate::spectral::density::{DensityFlags, SpectralDensity, ZeroAnnotation};
use crate::spectral::domain::Domain;
use crate::spectral::quad::{gk15, integrate, pairwise_sum, QuadOptions};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Pinned cross-validation tolerances.
const CLOSED_FORM_TOL: f64 = 1e-6;
const RESOLUTION_TOL: f64 = 1e-8;
const MASS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TransformStrategy {
    /// Radial Hankel transform, fast-decaying kernel (d = 2).
    Radial2d,
    /// Segmented cosine transform with analytic tail (d = 1).
    Axis1d,
    /// Product of per-axis cosine transforms (d = 2).
    TensorAxes2d,
}

/// Translation-invariant determinantal kernel with unit intensity.
pub struct DppKernel {
    label: String,
    d: usize,
    /// `|K(x)|` as a function of the displacement.
    kernel: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    /// Closed-form transform of `K^2`.
    squared_transform: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    strategy: TransformStrategy,
    flags: DensityFlags,
    zeros: Vec<ZeroAnnotation>,
}

/// Ginibre ensemble rescaled to unit intensity: `|K(x)| = e^{-pi |x|^2 / 2}`
/// on the plane. The squared kernel transforms to `e^{-|u|^2 / 4 pi}`.
pub fn ginibre() -> DppKernel {
    DppKernel {
        label: "ginibre".into(),
        d: 2,
        kernel: Arc::new(|x: &[f64]| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            (-0.5 * std::f64::consts::PI * r2).exp()
        }),
        squared_transform: Arc::new(|u: &[f64]| {
            let r2 = u[0] * u[0] + u[1] * u[1];
            (-r2 / (4.0 * std::f64::consts::PI)).exp()
        }),
        strategy: TransformStrategy::Radial2d,
        flags: DensityFlags {
            isotropic: true,
            simple: true,
            ..Default::default()
        },
        zeros: vec![ZeroAnnotation {
            location: vec![0.0, 0.0],
            order: 1,
        }],
    }
}

/// Sine process on the line with unit intensity: `K(x) = sin(pi x)/(pi x)`.
/// The squared kernel transforms to the triangle `(1 - |u|/2 pi)_+`.
pub fn sine() -> DppKernel {
    DppKernel {
        label: "sine".into(),
        d: 1,
        kernel: Arc::new(|x: &[f64]| sinc_pi(x[0])),
        squared_transform: Arc::new(|u: &[f64]| (1.0 - u[0].abs() / TWO_PI).max(0.0)),
        strategy: TransformStrategy::Axis1d,
        flags: DensityFlags {
            isotropic: true,
            simple: true,
            ..Default::default()
        },
        zeros: vec![ZeroAnnotation {
            location: vec![0.0],
            order: 1,
        }],
    }
}

/// Tensor product of two sine kernels on the plane:
/// `K(x) = sinc(pi x_1) sinc(pi x_2)`. The squared kernel transforms to the
/// product of triangles, so the density vanishes to first order along rays
/// but only like `|u|` at the origin.
pub fn tensor_sinc() -> DppKernel {
    DppKernel {
        label: "tensor_sinc".into(),
        d: 2,
        kernel: Arc::new(|x: &[f64]| sinc_pi(x[0]) * sinc_pi(x[1])),
        squared_transform: Arc::new(|u: &[f64]| {
            let a = (1.0 - u[0].abs() / TWO_PI).max(0.0);
            let b = (1.0 - u[1].abs() / TWO_PI).max(0.0);
            a * b
        }),
        strategy: TransformStrategy::TensorAxes2d,
        flags: DensityFlags {
            simple: true,
            ..Default::default()
        },
        zeros: vec![ZeroAnnotation {
            location: vec![0.0, 0.0],
            order: 0,
        }],
    }
}

fn sinc_pi(x: f64) -> f64 {
    let t = std::f64::consts::PI * x;
    if t.abs() < 1e-8 {
        1.0 - t * t / 6.0
    } else {
        t.sin() / t
    }
}

/// The standard builtin kernels in a fixed order.
pub fn builtin_kernels() -> Vec<DppKernel> {
    vec![ginibre(), sine(), tensor_sinc()]
}

pub fn kernel_by_label(label: &str) -> Result<DppKernel> {
    builtin_kernels()
        .into_iter()
        .find(|k| k.label == label)
        .ok_or_else(|| {
            RigidityError::InvalidInput(format!(
                "unknown kernel {label:?}; available: ginibre, sine, tensor_sinc"
            ))
        })
}

impl DppKernel {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn intensity(&self) -> f64 {
        (self.kernel)(&vec![0.0; self.d])
    }

    pub fn kernel_value(&self, x: &[f64]) -> f64 {
        (self.kernel)(x)
    }

    /// Closed-form transform of the squared kernel.
    pub fn squared_transform(&self, u: &[f64]) -> f64 {
        (self.squared_transform)(u)
    }

    /// Spectral density of the counting measure,
    /// `s(u) = (2 pi)^{-d} (1 - T(u))`, with zero annotations and
    /// structure flags attached.
    pub fn structure_factor(&self) -> Result<SpectralDensity> {
        let norm = TWO_PI.powi(-(self.d as i32));
        let label = format!("dpp_{}", self.label);
        let eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> = match self.label.as_str() {
            // stable forms near the zero of 1 - T
            "ginibre" => Arc::new(move |u: &[f64]| {
                let r2 = u[0] * u[0] + u[1] * u[1];
                norm * (-(-r2 / (4.0 * std::f64::consts::PI)).exp_m1())
            }),
            "sine" => Arc::new(move |u: &[f64]| norm * (u[0].abs() / TWO_PI).min(1.0)),
            "tensor_sinc" => Arc::new(move |u: &[f64]| {
                let a = u[0].abs() / TWO_PI;
                let b = u[1].abs() / TWO_PI;
                if a < 1.0 && b < 1.0 {
                    // 1 - (1 - a)(1 - b) without cancellation
                    norm * (a + b - a * b)
                } else {
                    norm
                }
            }),
            _ => {
                let t = Arc::clone(&self.squared_transform);
                Arc::new(move |u: &[f64]| norm * (1.0 - t(u)).max(0.0))
            }
        };
        SpectralDensity::new(
            Domain::euclidean(self.d),
            label,
            self.flags.clone(),
            self.zeros.clone(),
            vec![],
            move |u: &[f64]| eval(u),
        )
    }

    /// Numeric transform of the squared kernel at one frequency.
    ///
    /// `scale` stretches the truncation range and is the lever for the
    /// two-resolution agreement check.
    pub fn numeric_squared_transform(&self, u: &[f64], scale: f64) -> Result<f64> {
        if u.len() != self.d {
            return Err(RigidityError::InvalidInput(
                "frequency dimension does not match the kernel".into(),
            ));
        }
        match self.strategy {
            TransformStrategy::Radial2d => {
                let r = (u[0] * u[0] + u[1] * u[1]).sqrt();
                let kern = Arc::clone(&self.kernel);
                let f = |t: f64| {
                    let k = kern(&[t, 0.0]);
                    k * k * libm::j0(r * t) * t
                };
                let opt = QuadOptions::with_rel_tol(1e-11);
                Ok(TWO_PI * integrate(&f, 0.0, 6.0 * scale, &opt)?)
            }
            TransformStrategy::Axis1d => {
                let kern = Arc::clone(&self.kernel);
                Ok(cosine_transform_1d(
                    &|x| {
                        let k = kern(&[x]);
                        k * k
                    },
                    u[0].abs(),
                    (10_000.0 * scale) as usize,
                ))
            }
            TransformStrategy::TensorAxes2d => {
                let kern = Arc::clone(&self.kernel);
                let t = (10_000.0 * scale) as usize;
                let fx = cosine_transform_1d(
                    &|x| {
                        let k = kern(&[x, 0.0]);
                        k * k
                    },
                    u[0].abs(),
                    t,
                );
                let fy = cosine_transform_1d(
                    &|y| {
                        let k = kern(&[0.0, y]);
                        k * k
                    },
                    u[1].abs(),
                    t,
                );
                Ok(fx * fy)
            }
        }
    }

    /// Squared-kernel mass `int K^2 dx`, numerically.
    pub fn numeric_kernel_mass(&self) -> Result<f64> {
        match self.strategy {
            TransformStrategy::Radial2d => {
                let kern = Arc::clone(&self.kernel);
                let f = |t: f64| {
                    let k = kern(&[t, 0.0]);
                    k * k * t
                };
                let opt = QuadOptions::with_rel_tol(1e-11);
                Ok(TWO_PI * integrate(&f, 0.0, 8.0, &opt)?)
            }
            TransformStrategy::Axis1d => self.numeric_squared_transform(&[0.0], 1.0),
            TransformStrategy::TensorAxes2d => self.numeric_squared_transform(&[0.0, 0.0], 1.0),
        }
    }
}

/// Truncated cosine transform `2 int_0^T g(x) cos(u x) dx` over half-unit
/// panels, plus the analytic tail of the squared-sinc envelope
/// `g(x) = (1 - cos 2 pi x) / (2 pi^2 x^2)` beyond the truncation. The tail
/// splits into cosines at frequencies `u`, `2 pi + u` and `|2 pi - u|`;
/// each component must either vanish or satisfy `a T >> 1` for the
/// asymptotic expansion, which holds for the pinned probe set.
fn cosine_transform_1d(g: &dyn Fn(f64) -> f64, u: f64, t_max: usize) -> f64 {
    let f = |x: f64| g(x) * (u * x).cos();
    let mut panels = Vec::with_capacity(2 * t_max);
    for j in 0..2 * t_max {
        let a = 0.5 * j as f64;
        let b = a + 0.5;
        panels.push(gk15(&f, a, b).0);
    }
    let t = t_max as f64;
    let amp = 1.0 / (2.0 * std::f64::consts::PI.powi(2));
    let tail = amp
        * (cos_over_x2_tail(u, t)
            - 0.5 * cos_over_x2_tail(TWO_PI + u, t)
            - 0.5 * cos_over_x2_tail((TWO_PI - u).abs(), t));
    2.0 * (pairwise_sum(&panels) + tail)
}

/// `int_T^inf cos(a x) / x^2 dx`, asymptotically for `a T >> 1` (exact for
/// `a = 0`).
fn cos_over_x2_tail(a: f64, t: f64) -> f64 {
    if a.abs() < 1e-12 {
        1.0 / t
    } else {
        let z = a * t;
        -z.sin() / (a * t * t) + 2.0 * z.cos() / (a * a * t * t * t)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformProbe {
    pub u: Vec<f64>,
    pub closed: f64,
    pub numeric: f64,
}

/// Cross-validation of the closed-form transform against the numeric one.
#[derive(Debug, Clone, Serialize)]
pub struct TransformCheck {
    pub label: String,
    pub probes: Vec<TransformProbe>,
    /// Largest |closed - numeric| over the probes.
    pub closed_form_gap: f64,
    /// Largest |numeric(T) - numeric(2T)| over the probes.
    pub resolution_gap: f64,
    /// Numeric `int K^2` against the intensity deficit `T(0)`.
    pub kernel_mass: f64,
    pub kernel_mass_gap: f64,
}

fn probe_frequencies(k: &DppKernel) -> Vec<Vec<f64>> {
    let pi = std::f64::consts::PI;
    match k.dim() {
        1 => [0.0, 0.5, 1.0, pi, 5.0, TWO_PI, 7.0]
            .iter()
            .map(|&u| vec![u])
            .collect(),
        _ => vec![
            vec![0.0, 0.0],
            vec![0.5, 0.0],
            vec![1.0, 0.5],
            vec![pi, 1.0],
            vec![5.0, 2.0],
            vec![TWO_PI, 1.0],
            vec![7.0, 7.0],
        ],
    }
}

/// Check the closed-form transform of the squared kernel against an
/// independent numeric transform at pinned probe frequencies, at two
/// truncation ranges, and through the squared-kernel mass identity
/// `int K^2 = T(0)`.
pub fn validate_transform(k: &DppKernel) -> Result<TransformCheck> {
    let mut probes = Vec::new();
    let mut closed_gap = 0.0f64;
    let mut res_gap = 0.0f64;
    for u in probe_frequencies(k) {
        let closed = k.squared_transform(&u);
        let numeric = k.numeric_squared_transform(&u, 1.0)?;
        let refined = k.numeric_squared_transform(&u, 2.0)?;
        closed_gap = closed_gap.max((closed - numeric).abs());
        res_gap = res_gap.max((numeric - refined).abs());
        probes.push(TransformProbe {
            u,
            closed,
            numeric,
        });
    }
    let mass = k.numeric_kernel_mass()?;
    let mass_gap = (mass - k.squared_transform(&vec![0.0; k.dim()])).abs();
    if res_gap > RESOLUTION_TOL {
        return Err(RigidityError::TransformMismatch(format!(
            "numeric transform of {} unstable under range doubling (gap {res_gap:.3e})",
            k.label
        )));
    }
    if closed_gap > CLOSED_FORM_TOL {
        return Err(RigidityError::TransformMismatch(format!(
            "closed-form transform of {} disagrees with the numeric one (gap {closed_gap:.3e})",
            k.label
        )));
    }
    if mass_gap > MASS_TOL {
        return Err(RigidityError::TransformMismatch(format!(
            "squared-kernel mass of {} violates the transform identity (gap {mass_gap:.3e})",
            k.label
        )));
    }
    Ok(TransformCheck {
        label: k.label.clone(),
        probes,
        closed_form_gap: closed_gap,
        resolution_gap: res_gap,
        kernel_mass: mass,
        kernel_mass_gap: mass_gap,
    })
}

/// Rigidity of the counting measure, order by order.
#[derive(Debug, Clone, Serialize)]
pub struct DppRigidityReport {
    pub label: String,
    /// Largest `r` such that every statistic of total order `<= r` is
    /// certified rigid; `None` when already the mass is not.
    pub order: Option<u32>,
    /// True when the first non-rigid level was certified by a converse
    /// (rather than merely lacking a certificate).
    pub frontier_certified: bool,
    pub reports: Vec<ClassificationReport>,
}

/// Free-function form of [`DppKernel::structure_factor`].
pub fn structure_factor_from_kernel(kern: &DppKernel) -> Result<SpectralDensity> {
    kern.structure_factor()
}

/// Classify rigidity of all moment statistics with total order `<= cap`
/// and reduce to a single rigidity order.
pub fn dpp_rigidity_order(
    k: &DppKernel,
    cap: u32,
    cfg: &ClassifierConfig,
) -> Result<DppRigidityReport> {
    let s = k.structure_factor()?;
    let mut reports = Vec::new();
    for idx in multi_indices_up_to(k.dim(), cap) {
        reports.push(rigidity_classifier(&s, &idx, cfg)?);
    }
    let mut order = None;
    let mut frontier_certified = false;
    for level in 0..=cap {
        let at_level: Vec<&ClassificationReport> = reports
            .iter()
            .filter(|r| r.k.total() == level)
            .collect();
        if at_level.iter().all(|r| r.verdict == RigidityVerdict::KRigid) {
            order = Some(level);
            continue;
        }
        frontier_certified = at_level
            .iter()
            .any(|r| r.verdict == RigidityVerdict::NotKRigid);
        break;
    }
    Ok(DppRigidityReport {
        label: k.label.clone(),
        order,
        frontier_certified,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poles::Provenance;

    #[test]
    fn transforms_agree_with_closed_forms() {
        for k in builtin_kernels() {
            let check = validate_transform(&k).unwrap();
            assert!(
                check.closed_form_gap <= CLOSED_FORM_TOL,
                "{}: {check:?}",
                k.label()
            );
            assert!(check.kernel_mass_gap <= MASS_TOL, "{}", k.label());
        }
    }

    #[test]
    fn planar_gaussian_kernel_is_mass_rigid_only() {
        let rep = dpp_rigidity_order(&ginibre(), 1, &ClassifierConfig::default()).unwrap();
        assert_eq!(rep.order, Some(0), "{:?}", rep.reports);
        assert!(rep.frontier_certified);
        let k10 = rep
            .reports
            .iter()
            .find(|r| r.k.0 == vec![1, 0])
            .unwrap();
        assert_eq!(k10.verdict, RigidityVerdict::NotKRigid);
        assert_eq!(k10.provenance, Provenance::SimpleConverse);
    }

    #[test]
    fn line_sine_kernel_is_mass_rigid_only() {
        let rep = dpp_rigidity_order(&sine(), 1, &ClassifierConfig::default()).unwrap();
        assert_eq!(rep.order, Some(0), "{:?}", rep.reports);
        assert!(rep.frontier_certified);
    }

    #[test]
    fn tensor_kernel_is_not_mass_rigid() {
        let rep = dpp_rigidity_order(&tensor_sinc(), 0, &ClassifierConfig::default()).unwrap();
        assert_eq!(rep.order, None, "{:?}", rep.reports);
        assert!(rep.frontier_certified);
    }

    #[test]
    fn structure_factors_are_nonnegative_and_vanish_at_zero() {
        for k in builtin_kernels() {
            let s = k.structure_factor().unwrap();
            let origin = vec![0.0; k.dim()];
            assert!(s.eval(&origin).abs() < 1e-15, "{}", k.label());
            let probe = vec![0.3; k.dim()];
            assert!(s.eval(&probe) > 0.0);
            // far field is flat at (2 pi)^{-d}
            let far = vec![30.0; k.dim()];
            let expected = TWO_PI.powi(-(k.dim() as i32));
            assert!((s.eval(&far) - expected).abs() < 1e-12);
        }
    }
}
