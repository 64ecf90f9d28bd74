//! Named densities used by the bundled examples, tests and the CLI.
//!
//! Torus densities are normalized at construction so that `C(0) = 1`.

use crate::error::{Result, RigidityError};
use crate::spectral::density::{Atom, DensityFlags, SpectralDensity, ZeroAnnotation};
use crate::spectral::domain::Domain;

/// White noise on `Z^d`: `s = (2 pi)^{-d}`.
pub fn white_noise(d: usize) -> Result<SpectralDensity> {
    let c = (2.0 * std::f64::consts::PI).powi(-(d as i32));
    SpectralDensity::new(
        Domain::torus(d),
        "white_noise",
        DensityFlags {
            simple: true,
            separable: true,
            isotropic: true,
        },
        vec![],
        vec![],
        move |_| c,
    )
}

/// Unit-root moving average on `Z`: `s(u) = (2 - 2 cos u) / (4 pi)`,
/// normalized so `C(0) = 1`; `C(+-1) = -1/2`. The inverse density has a
/// second-order zero at the origin (pole order 1).
pub fn ma1_unit_root() -> Result<SpectralDensity> {
    SpectralDensity::new(
        Domain::torus(1),
        "ma1_unit_root",
        DensityFlags {
            simple: true,
            ..Default::default()
        },
        vec![ZeroAnnotation {
            location: vec![0.0],
            order: 1,
        }],
        vec![],
        |u| {
            // 2 - 2 cos u written without cancellation near the zero
            let h = (0.5 * u[0]).sin();
            4.0 * h * h / (4.0 * std::f64::consts::PI)
        },
    )
}

/// AR(1) on `Z`: `s(u) = (1 - phi^2) / (2 pi |1 - phi e^{iu}|^2)`, the
/// density of covariance `phi^{|m|}`.
pub fn ar1(phi: f64) -> Result<SpectralDensity> {
    if !(phi.abs() < 1.0) {
        return Err(RigidityError::InvalidInput(
            "AR(1) parameter must satisfy |phi| < 1".into(),
        ));
    }
    SpectralDensity::new(
        Domain::torus(1),
        format!("ar1(phi={phi})"),
        DensityFlags {
            simple: true,
            ..Default::default()
        },
        vec![],
        vec![],
        move |u| {
            // |1 - phi e^{iu}|^2 = (1 - phi)^2 + 4 phi sin^2(u/2)
            let h = (0.5 * u[0]).sin();
            let denom = (1.0 - phi) * (1.0 - phi) + 4.0 * phi * h * h;
            (1.0 - phi * phi) / denom / (2.0 * std::f64::consts::PI)
        },
    )
}

/// Quartic torus density `s(u) = (u - 1)^2 (u + 1)^2 / Z` on `[-pi, pi)`,
/// normalized to unit mass. The inverse has simple (order 1) poles at
/// `u = +-1`; rigidity of lattice statistics on `[-1, 1]` is sensitive to
/// the derivative order, not monotonically.
pub fn quartic_pm1() -> Result<SpectralDensity> {
    let raw = SpectralDensity::new(
        Domain::torus(1),
        "quartic_pm1",
        DensityFlags {
            simple: true,
            ..Default::default()
        },
        vec![
            ZeroAnnotation {
                location: vec![1.0],
                order: 1,
            },
            ZeroAnnotation {
                location: vec![-1.0],
                order: 1,
            },
        ],
        vec![],
        |u| {
            let a = u[0] - 1.0;
            let b = u[0] + 1.0;
            a * a * b * b
        },
    )?;
    raw.normalized_to_unit_mass()
}

/// Radial power density `s(u) = c |u|^alpha` on `R^d`.
pub fn radial_power(d: usize, alpha: f64, c: f64) -> Result<SpectralDensity> {
    if c <= 0.0 || alpha < 0.0 {
        return Err(RigidityError::InvalidInput(
            "radial power density needs c > 0 and alpha >= 0".into(),
        ));
    }
    // Pole order of 1/s at 0: least q with 2q + d > alpha.
    let order = ((((alpha - d as f64) / 2.0).floor() as i64) + 1).max(0) as u32;
    let zeros = if alpha > 0.0 {
        vec![ZeroAnnotation {
            location: vec![0.0; d],
            order,
        }]
    } else {
        vec![]
    };
    SpectralDensity::new(
        Domain::euclidean(d),
        format!("radial_power(alpha={alpha})"),
        DensityFlags {
            isotropic: true,
            ..Default::default()
        },
        zeros,
        vec![],
        move |u| {
            let r2: f64 = u.iter().map(|x| x * x).sum();
            c * r2.sqrt().powf(alpha)
        },
    )
}

/// Planar second-moment scaling density `s(u) = c |u|^4` on `R^2` (the
/// zoomed-out spectral density of a hyperuniform field with vanishing first
/// moments; rigid up to first-order statistics, not second).
pub fn gaf_scaling(c: f64) -> Result<SpectralDensity> {
    radial_power(2, 4.0, c)
}

/// Anisotropic planar density `s(u) = (u_1 - u_2)^2`, vanishing on a line
/// through the origin. Its rigidity order is direction dependent: linear
/// statistics reproducing the mass are rigid while the `(1,0)` derivative is
/// witnessed non-rigid by `u_1 - u_2`.
pub fn line_zero_square() -> Result<SpectralDensity> {
    // The zero set is a whole line, not an isolated point, so no finite
    // pole order is annotated; Gram-based tests locate the valley
    // adaptively.
    SpectralDensity::new(
        Domain::euclidean(2),
        "line_zero_square",
        DensityFlags::default(),
        vec![],
        vec![],
        |u| {
            let v = u[0] - u[1];
            v * v
        },
    )
}

/// Planar density vanishing only on a segment of the `u_2 = 0` axis away
/// from the origin: `s = 1` inside `|u| <= 1/2` and
/// `s = u_2^2 / ((1 + u_1^10)(1 + u_2^10))` outside, glued smoothly.
///
/// Near `(+-1, 0)` the density behaves like `u_2^2`, which forces mass
/// rigidity, while `s` is bounded below near the origin; no structural
/// converse applies, so a correct classifier must not claim non-rigidity
/// from the origin behaviour alone.
pub fn off_origin_valley() -> Result<SpectralDensity> {
    SpectralDensity::new(
        Domain::euclidean(2),
        "off_origin_valley",
        DensityFlags::default(),
        vec![],
        vec![],
        |u| {
            let r = (u[0] * u[0] + u[1] * u[1]).sqrt();
            let outer = u[1] * u[1] / ((1.0 + u[0].powi(10)) * (1.0 + u[1].powi(10)));
            if r <= 0.5 {
                1.0
            } else if r < 1.0 {
                // smooth blend on 1/2 < r < 1
                let t = (r - 0.5) / 0.5;
                let w = t * t * (3.0 - 2.0 * t);
                (1.0 - w) + w * outer
            } else {
                outer
            }
        },
    )
}

/// Synthetic torus density with prescribed zero locations and pole orders:
/// `s(u) = prod_i |e^{iu} - e^{iu_i}|^{2 q_i} * base(u)`, normalized to unit
/// mass. Zeros must be listed once per location (orders give multiplicity);
/// mirror locations are added automatically for non-self-paired points.
pub fn torus_with_zeros(zeros: &[(f64, u32)], base_label: &str) -> Result<SpectralDensity> {
    let pi = std::f64::consts::PI;
    let mut anno: Vec<ZeroAnnotation> = Vec::new();
    let mut factors: Vec<(f64, u32)> = Vec::new();
    for &(loc, order) in zeros {
        if order == 0 {
            continue;
        }
        if !(-pi..pi).contains(&loc) {
            return Err(RigidityError::InvalidInput(format!(
                "zero location {loc} outside [-pi, pi)"
            )));
        }
        factors.push((loc, order));
        anno.push(ZeroAnnotation {
            location: vec![loc],
            order,
        });
        let self_paired = loc == 0.0 || loc == -pi;
        if !self_paired {
            factors.push((-loc, order));
            anno.push(ZeroAnnotation {
                location: vec![-loc],
                order,
            });
        }
    }
    let raw = SpectralDensity::new(
        Domain::torus(1),
        format!("torus_zeros({base_label})"),
        DensityFlags {
            simple: true,
            ..Default::default()
        },
        anno,
        vec![],
        move |u| {
            let mut v = 1.0;
            for &(loc, order) in &factors {
                // |e^{iu} - e^{i loc}|^2 = 4 sin^2((u - loc)/2)
                let h = (0.5 * (u[0] - loc)).sin();
                v *= (4.0 * h * h).powi(order as i32);
            }
            v
        },
    )?;
    raw.normalized_to_unit_mass()
}

/// Product of two unit-root densities on the 2-torus:
/// `s(u) = (1 - cos u_1)(1 - cos u_2) / (2 pi)^2`. The density vanishes on
/// the coordinate axes (line zeros, annotated at the crossing), so window
/// averages are predictable from the outside while mixed even moments are
/// not.
pub fn torus_product_zeros() -> Result<SpectralDensity> {
    let norm = 1.0 / (2.0 * std::f64::consts::PI).powi(2);
    SpectralDensity::new(
        Domain::torus(2),
        "torus_product_zeros",
        DensityFlags {
            separable: true,
            ..Default::default()
        },
        // the zero set is the union of both axes; the annotation marks the
        // crossing and supplies axis breakpoints, not an isolated order
        vec![ZeroAnnotation {
            location: vec![0.0, 0.0],
            order: 2,
        }],
        vec![],
        move |u| {
            let h1 = (0.5 * u[0]).sin();
            let h2 = (0.5 * u[1]).sin();
            4.0 * h1 * h1 * h2 * h2 * norm
        },
    )
}

/// Pure atom measure (deterministic oscillation) plus a flat floor; used to
/// exercise atom handling. `s = floor/(2pi)` with atoms at `+-loc`.
pub fn atomic_with_floor(loc: f64, mass: f64, floor: f64) -> Result<SpectralDensity> {
    let c = floor / (2.0 * std::f64::consts::PI);
    SpectralDensity::new(
        Domain::torus(1),
        "atomic_with_floor",
        DensityFlags::default(),
        vec![],
        vec![
            Atom {
                location: vec![loc],
                mass: mass / 2.0,
            },
            Atom {
                location: vec![-loc],
                mass: mass / 2.0,
            },
        ],
        move |_| c,
    )
}
