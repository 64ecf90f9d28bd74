//! Validation of densities claimed to have simple zero structure.
//!
//! "Simple" means: the zero set is exactly the annotated finite list of
//! points, each with a finite pole order matching its annotation, and the
//! density is bounded away from zero elsewhere (with a polynomially
//! controlled envelope at infinity on Euclidean domains). These are the
//! hypotheses under which a failed pole certificate upgrades to a
//! non-rigidity conclusion.

use serde::Serialize;

use super::order::{finite_pole_order, FiniteOrderConfig};
use crate::error::{Result, RigidityError};
use crate::spectral::density::{validation_points, SpectralDensity};
use crate::spectral::domain::Domain;
use crate::spectral::ladder::direction_set;

/// Tuning for [`classify_simple`].
#[derive(Debug, Clone)]
pub struct SimpleConfig {
    pub order: FiniteOrderConfig,
    /// Radius of the balls carved out around annotated zeros before the
    /// positivity floor is sampled.
    pub exclusion_radius: f64,
    /// Half side of the box sampled for the floor (Euclidean domains; tori
    /// always use the full fundamental domain).
    pub floor_half_side: f64,
    /// Number of dyadic envelope radii checked at infinity.
    pub envelope_shells: usize,
    /// Directions sampled per envelope shell.
    pub envelope_directions: usize,
}

impl Default for SimpleConfig {
    fn default() -> Self {
        SimpleConfig {
            order: FiniteOrderConfig::default(),
            exclusion_radius: 0.35,
            floor_half_side: 4.0,
            envelope_shells: 10,
            envelope_directions: 64,
        }
    }
}

/// Outcome of one annotated zero check.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroCheck {
    pub location: Vec<f64>,
    pub annotated_order: u32,
    pub measured_order: Option<u32>,
    pub ok: bool,
}

/// Validation report for the simple-structure claim.
#[derive(Debug, Clone, Serialize)]
pub struct SimpleReport {
    pub simple: bool,
    pub zeros: Vec<ZeroCheck>,
    /// Smallest sampled density value away from the annotated zeros.
    pub floor: f64,
    /// Dyadic log-slopes of the directional minimum at infinity
    /// (Euclidean domains only).
    pub envelope_slopes: Vec<f64>,
    pub reasons: Vec<String>,
}

/// Coordinate-descent minimum of `f` inside the fixed box `center +- h`
/// per axis. The objective must already exclude the neighbourhoods of the
/// annotated zeros (by returning infinity there), because a cell box can
/// overlap them.
fn refine_cell_min(f: &dyn Fn(&[f64]) -> f64, center: &[f64], h: f64) -> f64 {
    let d = center.len();
    let mut x = center.to_vec();
    for _ in 0..4 {
        for axis in 0..d {
            let lo = center[axis] - h;
            let hi = center[axis] + h;
            // coarse scan picks the basin, golden section polishes it
            let mut best_t = x[axis];
            let mut best_v = f64::INFINITY;
            for i in 0..17 {
                let t = lo + (hi - lo) * i as f64 / 16.0;
                x[axis] = t;
                let v = f(&x);
                if v < best_v {
                    best_v = v;
                    best_t = t;
                }
            }
            let step = (hi - lo) / 16.0;
            let (mut a, mut b) = ((best_t - step).max(lo), (best_t + step).min(hi));
            let inv_phi = 0.618_033_988_749_894_9;
            let mut t1 = b - inv_phi * (b - a);
            let mut t2 = a + inv_phi * (b - a);
            x[axis] = t1;
            let mut f1 = f(&x);
            x[axis] = t2;
            let mut f2 = f(&x);
            for _ in 0..40 {
                if f1 <= f2 {
                    b = t2;
                    t2 = t1;
                    f2 = f1;
                    t1 = b - inv_phi * (b - a);
                    x[axis] = t1;
                    f1 = f(&x);
                } else {
                    a = t1;
                    t1 = t2;
                    f1 = f2;
                    t2 = a + inv_phi * (b - a);
                    x[axis] = t2;
                    f2 = f(&x);
                }
            }
            x[axis] = if f1 <= f2 { t1 } else { t2 };
        }
    }
    f(&x)
}

/// Distance respecting torus wrap-around in each coordinate.
fn domain_distance(domain: Domain, a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        let mut diff = (a[i] - b[i]).abs();
        if domain.is_torus() {
            diff = diff.rem_euclid(2.0 * std::f64::consts::PI);
            diff = diff.min(2.0 * std::f64::consts::PI - diff);
        }
        acc += diff * diff;
    }
    acc.sqrt()
}

/// Check that the annotated zero list is complete and correct and that the
/// density is positive elsewhere.
///
/// An empty annotation list claims the density has no zeros at all. The
/// report never errors on a failed claim; `simple = false` plus reasons is
/// the honest answer. Errors are reserved for malformed inputs.
pub fn classify_simple(s: &SpectralDensity, cfg: &SimpleConfig) -> Result<SimpleReport> {
    let d = s.dim();
    let mut reasons = Vec::new();
    let mut zeros = Vec::new();
    let mut simple = true;

    if !s.atoms().is_empty() {
        simple = false;
        reasons.push("atomic components are outside the simple class".into());
    }

    for z in s.zeros() {
        if z.location.len() != d {
            return Err(RigidityError::InvalidInput(
                "zero annotation dimension does not match the density".into(),
            ));
        }
        // keep the scan local to this zero
        let mut nearest = f64::INFINITY;
        for other in s.zeros() {
            if std::ptr::eq(other, z) {
                continue;
            }
            nearest = nearest.min(domain_distance(s.domain(), &z.location, &other.location));
        }
        if nearest < 1e-9 {
            return Err(RigidityError::InvalidInput(
                "duplicate zero annotations at the same location".into(),
            ));
        }
        let mut ocfg = cfg.order.clone();
        ocfg.eps = ocfg.eps.min(0.45 * nearest);
        let measured = finite_pole_order(s, &z.location, &ocfg)?;
        let ok = !measured.undetermined && measured.order == Some(z.order);
        if !ok {
            simple = false;
            reasons.push(format!(
                "zero at {:?}: annotated order {} but measured {:?}{}",
                z.location,
                z.order,
                measured.order,
                if measured.undetermined {
                    " (scan undetermined)"
                } else {
                    ""
                }
            ));
        }
        zeros.push(ZeroCheck {
            location: z.location.clone(),
            annotated_order: z.order,
            measured_order: measured.order,
            ok,
        });
    }

    // positivity floor away from the annotated zeros: sample a grid, then
    // refine the smallest cells with a local minimiser so zeros hiding
    // between grid points are still found
    let half_side = if s.domain().is_torus() {
        std::f64::consts::PI
    } else {
        cfg.floor_half_side
    };
    // cell half-widths mirror the per-axis counts of validation_points
    let per_axis = match d {
        1 => 33.0,
        2 => 9.0,
        _ => 5.0,
    };
    let cell_h = half_side / per_axis;
    let mut cells: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut scale = 0.0f64;
    for p in validation_points(d, half_side) {
        let excluded = s
            .zeros()
            .iter()
            .any(|z| domain_distance(s.domain(), &p, &z.location) < cfg.exclusion_radius);
        let v = s.eval(&p);
        scale = scale.max(v);
        if !excluded {
            cells.push((v, p));
        }
    }
    let mut floor = f64::INFINITY;
    if cells.is_empty() {
        simple = false;
        reasons.push("exclusion radius swallowed every floor sample".into());
        floor = 0.0;
    } else {
        cells.sort_by(|a, b| a.0.total_cmp(&b.0));
        let guarded = |x: &[f64]| {
            let excluded = s
                .zeros()
                .iter()
                .any(|z| domain_distance(s.domain(), x, &z.location) < cfg.exclusion_radius);
            if excluded {
                f64::INFINITY
            } else {
                s.eval(x)
            }
        };
        for (_, center) in cells.iter().take(12) {
            floor = floor.min(refine_cell_min(&guarded, center, cell_h));
        }
        for (v, _) in cells.iter().skip(12) {
            floor = floor.min(*v);
        }
        if !(floor > 1e-10 * scale) {
            simple = false;
            reasons.push(format!(
                "density is not positive away from annotated zeros (floor {floor:.3e})"
            ));
        }
    }

    // envelope at infinity: directional minima along dyadic radii must have
    // a stabilising log-slope, ruling out super-polynomial decay
    let mut envelope_slopes = Vec::new();
    if !s.domain().is_torus() {
        let dirs = direction_set(d, cfg.envelope_directions)?;
        let mut mins = Vec::new();
        let mut hit_zero = false;
        for j in 0..cfg.envelope_shells {
            let rho = cfg.floor_half_side * 2.0f64.powi(j as i32);
            let mut m = f64::INFINITY;
            let mut p = vec![0.0; d];
            for v in &dirs {
                for i in 0..d {
                    p[i] = rho * v[i];
                }
                m = m.min(s.eval(&p));
            }
            if !(m > 0.0) {
                hit_zero = true;
                break;
            }
            mins.push(m);
        }
        if hit_zero {
            simple = false;
            reasons.push("density vanishes along some direction at large radius".into());
        } else {
            for w in mins.windows(2) {
                envelope_slopes.push((w[1] / w[0]).log2());
            }
            if let [.., prev, last] = envelope_slopes[..] {
                if (last - prev).abs() > 0.5 {
                    simple = false;
                    reasons.push(format!(
                        "directional minimum decays super-polynomially (log-slopes {prev:.2} then {last:.2})"
                    ));
                }
            }
        }
    }

    Ok(SimpleReport {
        simple,
        zeros,
        floor,
        envelope_slopes,
        reasons,
    })
}
