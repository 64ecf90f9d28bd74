//! Fourier duality between covariance sequences and spectral densities.
//!
//! Conventions (fixed across the crate):
//!
//! ```text
//! gamma_hat(u) = sum_m gamma(m) exp(-i m . u)
//! Var(X(gamma)) = int_{T^d} |gamma_hat|^2 s du + sum_atoms mass |gamma_hat(loc)|^2
//! C(m) = int_{T^d} cos(m . u) s(u) du + atom terms
//! s(u) = (2 pi)^{-d} sum_m C(m) cos(m . u)
//! ```
//!
//! White noise `C = {0 -> 1}` therefore has `s = (2 pi)^{-d}`.

use crate::error::{Result, RigidityError};
use crate::spectral::covariance::{CovarianceSequence, TailSpec};
use crate::spectral::density::{DensityFlags, SpectralDensity};
use crate::spectral::domain::Domain;
use crate::spectral::ladder::{
    direction_set, outward_shell_ladder, LadderConfig, LadderReport, LadderVerdict,
};
use crate::spectral::quad::{integrate_box, pairwise_sum};
use std::collections::BTreeMap;

/// Resolution of the nonnegativity grid used by [`density_from_covariance`].
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// Points per axis; must be at least twice the support radius.
    pub per_axis: usize,
}

impl GridSpec {
    pub fn for_radius(radius: i64) -> Self {
        GridSpec {
            per_axis: (4 * radius.max(1) as usize).max(64),
        }
    }
}

/// Synthesize the spectral density of a summable covariance sequence:
/// `s(u) = (2 pi)^{-d} sum_m C(m) cos(m . u)`.
///
/// Fails with [`RigidityError::NonSummableCovariance`] when the tail is
/// unknown and with [`RigidityError::NegativeDensity`] when the synthesized
/// function dips below zero on the validation grid (beyond a small
/// truncation allowance for geometric tails).
pub fn density_from_covariance(
    cov: &CovarianceSequence,
    grid: GridSpec,
) -> Result<SpectralDensity> {
    if matches!(cov.tail(), TailSpec::Unknown) {
        return Err(RigidityError::NonSummableCovariance(
            "covariance tail is unknown; provide a decay bound or a finite support".into(),
        ));
    }
    let d = cov.dim();
    let radius = cov.support_radius();
    if (grid.per_axis as i64) < 2 * radius.max(1) {
        return Err(RigidityError::InvalidInput(format!(
            "grid resolution {} is below twice the support radius {}",
            grid.per_axis, radius
        )));
    }
    let norm = (2.0 * std::f64::consts::PI).powi(-(d as i32));
    // Truncation allowance: geometric tails may shave a little mass.
    let trunc_allowance = match cov.tail() {
        TailSpec::Geometric { ratio } => {
            let r = radius as i32;
            // crude bound: 2 * sum_{m>radius} ratio^m per axis
            2.0 * d as f64 * ratio.powi(r + 1) / (1.0 - ratio)
        }
        _ => 0.0,
    };

    let entries: Vec<(Vec<i64>, f64)> = cov.support().map(|(m, v)| (m.clone(), *v)).collect();
    let eval = move |u: &[f64]| {
        let terms: Vec<f64> = entries
            .iter()
            .map(|(m, v)| {
                let phase: f64 = m.iter().zip(u).map(|(&mi, &ui)| mi as f64 * ui).sum();
                v * phase.cos()
            })
            .collect();
        norm * pairwise_sum(&terms)
    };

    // Nonnegativity on the validation grid (uniform, endpoints excluded).
    let pi = std::f64::consts::PI;
    let n = grid.per_axis;
    let mut worst = (vec![0.0; d], f64::INFINITY);
    let mut idx = vec![0usize; d];
    loop {
        let u: Vec<f64> = idx
            .iter()
            .map(|&i| -pi + (2.0 * pi) * (i as f64 + 0.5) / n as f64)
            .collect();
        let v = eval(&u);
        if v < worst.1 {
            worst = (u, v);
        }
        let mut axis = d;
        let mut done = true;
        while axis > 0 {
            axis -= 1;
            if idx[axis] + 1 < n {
                idx[axis] += 1;
                for x in idx.iter_mut().skip(axis + 1) {
                    *x = 0;
                }
                done = false;
                break;
            }
        }
        if done {
            break;
        }
    }
    let floor = -(1e-9 * cov.c0() + norm * trunc_allowance);
    if worst.1 < floor {
        return Err(RigidityError::NegativeDensity {
            location: worst.0,
            value: worst.1,
        });
    }

    // Clamp tiny negatives from truncation so downstream 1/s tests see a
    // genuine nonnegative density.
    let clamped = move |u: &[f64]| eval(u).max(0.0);
    SpectralDensity::new(
        Domain::torus(d),
        "from-covariance",
        DensityFlags::default(),
        vec![],
        vec![],
        clamped,
    )
}

/// Recover covariances from a torus density: `C(m) = int cos(m . u) s du`
/// plus atom contributions, for all `|m|_inf <= radius`.
pub fn covariance_from_density(s: &SpectralDensity, radius: i64) -> Result<CovarianceSequence> {
    if !s.domain().is_torus() {
        return Err(RigidityError::InvalidInput(
            "covariance recovery requires a torus density".into(),
        ));
    }
    if radius < 0 || radius > 512 {
        return Err(RigidityError::InvalidInput(format!(
            "radius {radius} out of supported range 0..=512"
        )));
    }
    let d = s.dim();
    let pi = std::f64::consts::PI;
    let lo = vec![-pi; d];
    let hi = vec![pi; d];
    let breaks: Vec<Vec<f64>> = (0..d)
        .map(|axis| s.zeros().iter().map(|z| z.location[axis]).collect())
        .collect();

    // The zero lag is the total mass and anchors an absolute quadrature
    // floor for the other lags, whose exact value may be zero.
    let c0 = integrate_box(&|u: &[f64]| s.eval(u), &lo, &hi, 1e-10, 0.0, &breaks)?
        + s.atoms().iter().map(|a| a.mass).sum::<f64>();
    let floor = 1e-12 * c0.abs().max(f64::MIN_POSITIVE);

    // Only compute one representative per {m, -m} pair.
    let mut entries: Vec<(Vec<i64>, f64)> = Vec::new();
    for m in crate::index::box_window(d, radius) {
        if !is_canonical(&m) {
            continue;
        }
        if m.iter().all(|&x| x == 0) {
            entries.push((m, c0));
            continue;
        }
        let mf: Vec<f64> = m.iter().map(|&x| x as f64).collect();
        let f = |u: &[f64]| {
            let phase: f64 = mf.iter().zip(u).map(|(a, b)| a * b).sum();
            phase.cos() * s.eval(u)
        };
        let mut v = integrate_box(&f, &lo, &hi, 1e-10, floor, &breaks)?;
        for atom in s.atoms() {
            let phase: f64 = mf.iter().zip(&atom.location).map(|(a, b)| a * b).sum();
            v += atom.mass * phase.cos();
        }
        entries.push((m, v));
    }
    CovarianceSequence::new(d, entries, TailSpec::Geometric { ratio: 0.99 })
}

/// Lexicographic canonical representative of the pair {m, -m}.
fn is_canonical(m: &[i64]) -> bool {
    for &x in m {
        if x > 0 {
            return true;
        }
        if x < 0 {
            return false;
        }
    }
    true // zero index
}

/// Exact variance of the linear statistic `X(gamma) = sum gamma(n) X_n`
/// from covariances: `sum_{n,n'} gamma(n) gamma(n') C(n - n')`.
pub fn variance_from_covariance(
    cov: &CovarianceSequence,
    gamma: &BTreeMap<Vec<i64>, f64>,
) -> f64 {
    let mut terms = Vec::with_capacity(gamma.len() * gamma.len());
    for (n1, g1) in gamma {
        for (n2, g2) in gamma {
            let diff: Vec<i64> = n1.iter().zip(n2).map(|(a, b)| a - b).collect();
            terms.push(g1 * g2 * cov.value(&diff));
        }
    }
    pairwise_sum(&terms)
}

/// Spectral-side variance of the same statistic:
/// `int |gamma_hat|^2 s du + sum atoms`.
pub fn variance_from_density(
    s: &SpectralDensity,
    gamma: &BTreeMap<Vec<i64>, f64>,
) -> Result<f64> {
    if !s.domain().is_torus() {
        return Err(RigidityError::InvalidInput(
            "spectral variance requires a torus density".into(),
        ));
    }
    let d = s.dim();
    let pi = std::f64::consts::PI;
    let lo = vec![-pi; d];
    let hi = vec![pi; d];
    let gh_sq = |u: &[f64]| {
        let mut re = 0.0;
        let mut im = 0.0;
        for (n, g) in gamma {
            let phase: f64 = n.iter().zip(u).map(|(&ni, &ui)| ni as f64 * ui).sum();
            re += g * phase.cos();
            im -= g * phase.sin();
        }
        re * re + im * im
    };
    let f = |u: &[f64]| gh_sq(u) * s.eval(u);
    let mut v = integrate_box(&f, &lo, &hi, 1e-10, 0.0, &[])?;
    for atom in s.atoms() {
        v += atom.mass * gh_sq(&atom.location);
    }
    Ok(v)
}

/// Report of the temperedness check `int (1 + |u|)^{-2(d+1)} S(du) < inf`.
#[derive(Debug, Clone)]
pub struct TemperednessReport {
    pub ladder: LadderReport,
    pub verdict: LadderVerdict,
}

/// Numerically check that a Euclidean spectral measure is tempered enough
/// for the variance identity: outward dyadic shells of
/// `(1 + |u|)^{-2(d+1)} s(u)` must have summable contributions. Torus
/// densities are trivially tempered.
pub fn validate_temperedness(s: &SpectralDensity, cfg: &LadderConfig) -> Result<TemperednessReport> {
    let d = s.dim();
    if s.domain().is_torus() {
        let report = LadderReport {
            shells: vec![],
            fitted_ratio: 0.0,
            fitted_log2_ratio: f64::NEG_INFINITY,
            verdict: LadderVerdict::Convergent,
        };
        return Ok(TemperednessReport {
            verdict: LadderVerdict::Convergent,
            ladder: report,
        });
    }
    let dirs = if s.flags().isotropic {
        vec![direction_set(d, 2)?[0].clone()]
    } else {
        direction_set(d, cfg.sphere_directions.min(64))?
    };
    let weight_pow = -2.0 * (d as f64 + 1.0);
    let profile = |rho: f64| {
        let vals: Vec<f64> = dirs
            .iter()
            .map(|th| {
                let u: Vec<f64> = th.iter().map(|t| t * rho).collect();
                let v = s.eval(&u);
                if v.is_finite() {
                    v
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let mean = pairwise_sum(&vals) / vals.len() as f64;
        mean * (1.0 + rho).powf(weight_pow)
    };
    // Outward shells from radius 1; the unit ball contributes finitely for
    // any locally integrable density.
    let mut cfg_out = cfg.clone();
    cfg_out.shells = cfg.shells.min(30); // 2^30 radius is plenty
    let ladder = outward_shell_ladder(&profile, d, 1.0, &cfg_out)?;
    // Atom contributions are finite sums; they never affect convergence.
    Ok(TemperednessReport {
        verdict: ladder.verdict,
        ladder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::covariance::TailSpec;

    fn ma1() -> CovarianceSequence {
        CovarianceSequence::new(
            1,
            vec![(vec![0], 2.0), (vec![1], -1.0)],
            TailSpec::Finite,
        )
        .unwrap()
    }

    #[test]
    fn white_noise_density_is_flat() {
        let cov =
            CovarianceSequence::new(1, vec![(vec![0], 1.0)], TailSpec::Finite).unwrap();
        let s = density_from_covariance(&cov, GridSpec::for_radius(1)).unwrap();
        let c = 1.0 / (2.0 * std::f64::consts::PI);
        for u in [-3.0, -1.0, 0.0, 0.5, 2.5] {
            assert!((s.eval(&[u]) - c).abs() < 1e-14);
        }
    }

    #[test]
    fn ma1_density_shape() {
        let s = density_from_covariance(&ma1(), GridSpec::for_radius(1)).unwrap();
        // (2 - 2 cos u) / (2 pi)
        for u in [0.0f64, 0.7, 2.0] {
            let expect = (2.0 - 2.0 * u.cos()) / (2.0 * std::f64::consts::PI);
            assert!((s.eval(&[u]) - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn round_trip_ma1() {
        let s = density_from_covariance(&ma1(), GridSpec::for_radius(1)).unwrap();
        let cov = covariance_from_density(&s, 3).unwrap();
        assert!((cov.value(&[0]) - 2.0).abs() < 1e-9);
        assert!((cov.value(&[1]) + 1.0).abs() < 1e-9);
        assert!(cov.value(&[2]).abs() < 1e-9);
        assert!(cov.value(&[3]).abs() < 1e-9);
    }

    #[test]
    fn ar1_density_matches_closed_form() {
        let phi = 0.5f64;
        let cov = CovarianceSequence::ar1(phi).unwrap();
        let s = density_from_covariance(&cov, GridSpec::for_radius(cov.support_radius()))
            .unwrap();
        for u in [0.0f64, 0.3, 1.0, 2.2, 3.0] {
            let denom = 1.0 - 2.0 * phi * u.cos() + phi * phi;
            let expect = (1.0 - phi * phi) / denom / (2.0 * std::f64::consts::PI);
            assert!(
                (s.eval(&[u]) - expect).abs() < 1e-6,
                "u={u}: {} vs {expect}",
                s.eval(&[u])
            );
        }
    }

    #[test]
    fn unknown_tail_is_rejected() {
        let cov = CovarianceSequence::new(
            1,
            vec![(vec![0], 1.0), (vec![1], 0.3)],
            TailSpec::Unknown,
        )
        .unwrap();
        assert!(matches!(
            density_from_covariance(&cov, GridSpec::for_radius(1)),
            Err(RigidityError::NonSummableCovariance(_))
        ));
    }

    #[test]
    fn variance_identity_ma1() {
        let cov = ma1();
        let s = density_from_covariance(&cov, GridSpec::for_radius(1)).unwrap();
        let mut gamma = BTreeMap::new();
        gamma.insert(vec![0i64], 1.0);
        gamma.insert(vec![1i64], 0.5);
        gamma.insert(vec![3i64], -2.0);
        let lhs = variance_from_covariance(&cov, &gamma);
        let rhs = variance_from_density(&s, &gamma).unwrap();
        assert!((lhs - rhs).abs() < 1e-8 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn temperedness_detects_growth() {
        let tame = SpectralDensity::new(
            Domain::euclidean(2),
            "poly",
            DensityFlags {
                isotropic: true,
                ..Default::default()
            },
            vec![],
            vec![],
            |u| {
                let r2: f64 = u.iter().map(|x| x * x).sum();
                r2
            },
        )
        .unwrap();
        let rep = validate_temperedness(&tame, &LadderConfig::default()).unwrap();
        assert_eq!(rep.verdict, LadderVerdict::Convergent);

        let wild = SpectralDensity::new(
            Domain::euclidean(1),
            "exp",
            DensityFlags::default(),
            vec![],
            vec![],
            |u| u[0].abs().min(700.0).exp(),
        )
        .unwrap();
        let rep = validate_temperedness(&wild, &LadderConfig::default()).unwrap();
        assert_eq!(rep.verdict, LadderVerdict::Divergent);
    }
}
