//! Deterministic adaptive quadrature.
//!
//! One-dimensional integrals use 15-point Gauss-Kronrod panels with greedy
//! bisection of the panel with the largest error estimate. Multi-dimensional
//! integrals over balls and boxes are iterated one-dimensional integrals.
//! All accumulation is done with fixed-order pairwise summation so results
//! are bit-stable across runs and thread counts.

use crate::error::{Result, RigidityError};

/// Abscissae of the 15-point Kronrod rule on [-1, 1] (positive half).
const XGK15: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

/// Weights of the 15-point Kronrod rule.
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_2,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Weights of the embedded 7-point Gauss rule (nodes XGK15[1], XGK15[3], ...).
const WG7: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Sum a slice by recursive pairwise reduction (deterministic, low error).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// One Gauss-Kronrod 15 panel: returns (integral, error estimate,
/// integral of |f|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut kron = [0.0f64; 8];
    let mut gauss = [0.0f64; 4];
    kron[7] = WGK15[7] * fc;
    let mut resabs = kron[7].abs();

    for j in 0..7 {
        let x = half * XGK15[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        let fsum = f1 + f2;
        kron[j] = WGK15[j] * fsum;
        resabs += WGK15[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss[j / 2] = WG7[j / 2] * fsum;
        }
    }
    // fc contributes to the Gauss rule through its center weight
    let res_gauss = (pairwise_sum(&gauss[..3]) + WG7[3] * fc) * half;
    let res_kron = pairwise_sum(&kron) * half;
    resabs *= half.abs();
    let err = (res_kron - res_gauss).abs().max(f64::EPSILON * resabs);
    (res_kron, err, resabs)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
}

/// Options for adaptive integration.
#[derive(Debug, Clone)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Interior points where the integrand is singular or kinked; panels
    /// never straddle them.
    pub breakpoints: Vec<f64>,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_panels: 4096,
            breakpoints: Vec::new(),
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadOptions {
            rel_tol,
            ..Default::default()
        }
    }

    pub fn breakpoints(mut self, pts: &[f64]) -> Self {
        self.breakpoints = pts.to_vec();
        self
    }
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Greedily bisects the panel with the largest error estimate. The final
/// value is the pairwise sum of panel values in left-to-right order, so the
/// result does not depend on the refinement history.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, opt: &QuadOptions) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(RigidityError::InvalidInput(format!(
            "bad integration interval [{a}, {b}]"
        )));
    }
    let mut cuts: Vec<f64> = vec![a, b];
    for &p in &opt.breakpoints {
        if p > a && p < b {
            cuts.push(p);
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();

    let mut panels: Vec<Panel> = Vec::new();
    for w in cuts.windows(2) {
        let (v, e, ra) = gk15(f, w[0], w[1]);
        panels.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
            resabs: ra,
        });
    }

    loop {
        let values: Vec<f64> = panels.iter().map(|p| p.value).collect();
        let errors: Vec<f64> = panels.iter().map(|p| p.error).collect();
        let resabs: Vec<f64> = panels.iter().map(|p| p.resabs).collect();
        let total = pairwise_sum(&values);
        let toterr = pairwise_sum(&errors);
        // Cancellation-aware scale: an oscillatory integrand whose exact
        // integral is near zero is resolved once the error is small against
        // the mass of |f|.
        let scale = total.abs().max(1e-2 * pairwise_sum(&resabs));
        if !total.is_finite() {
            return Err(RigidityError::QuadratureFailure(
                "non-finite integrand".into(),
            ));
        }
        if toterr <= opt.abs_tol.max(opt.rel_tol * scale) {
            return Ok(total);
        }
        if panels.len() >= opt.max_panels {
            // Accept if the error is small relative to the scale of the
            // integrand even when the target tolerance was missed slightly.
            if toterr <= 1e-6 * scale.max(opt.abs_tol) {
                return Ok(total);
            }
            return Err(RigidityError::QuadratureFailure(format!(
                "needed more than {} panels (err {:.3e}, value {:.6e})",
                opt.max_panels, toterr, total
            )));
        }
        // Bisect the worst panel; deterministic tie-break by position.
        let mut worst = 0usize;
        for (i, p) in panels.iter().enumerate() {
            if p.error > panels[worst].error
                || (p.error == panels[worst].error && p.a < panels[worst].a)
            {
                worst = i;
            }
        }
        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Interval at floating-point resolution; freeze its estimate.
            panels[worst].error = 0.0;
            continue;
        }
        let (v1, e1, r1) = gk15(f, p.a, mid);
        let (v2, e2, r2) = gk15(f, mid, p.b);
        panels[worst] = Panel {
            a: p.a,
            b: mid,
            value: v1,
            error: e1,
            resabs: r1,
        };
        panels.push(Panel {
            a: mid,
            b: p.b,
            value: v2,
            error: e2,
            resabs: r2,
        });
        panels.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap());
    }
}

/// Iterated adaptive integration over the box `prod_i [lo_i, hi_i]`.
///
/// `breakpoints[i]` lists interior singular coordinates along axis `i`.
/// `abs_tol` is an absolute error floor for every level; without it an
/// integral whose exact value is zero (for example an off-lag Fourier
/// coefficient of a flat density) can never satisfy a relative target.
pub fn integrate_box(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    lo: &[f64],
    hi: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    breakpoints: &[Vec<f64>],
) -> Result<f64> {
    let d = lo.len();
    if d == 0 || d != hi.len() {
        return Err(RigidityError::InvalidInput("bad box dimensions".into()));
    }
    // Inner levels get a slightly looser tolerance; error control is
    // dominated by the outermost level.
    fn recurse(
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
        lo: &[f64],
        hi: &[f64],
        rel_tol: f64,
        abs_tol: f64,
        breakpoints: &[Vec<f64>],
        prefix: &mut Vec<f64>,
    ) -> Result<f64> {
        let axis = prefix.len();
        let d = lo.len();
        let opt = QuadOptions {
            rel_tol,
            abs_tol: abs_tol.max(1e-300),
            max_panels: 2048,
            ..Default::default()
        }
        .breakpoints(breakpoints.get(axis).map(|v| v.as_slice()).unwrap_or(&[]));
        if axis == d - 1 {
            let g = |x: f64| {
                let mut u = prefix.clone();
                u.push(x);
                f(&u)
            };
            integrate(&g, lo[axis], hi[axis], &opt)
        } else {
            // Cell for error propagation from inner levels: evaluate the
            // inner integral exactly at the outer quadrature nodes.
            let g = |x: f64| {
                let mut pfx = prefix.clone();
                pfx.push(x);
                recurse(f, lo, hi, rel_tol, abs_tol, breakpoints, &mut pfx).unwrap_or(f64::NAN)
            };
            integrate(&g, lo[axis], hi[axis], &opt)
        }
    }
    let mut prefix = Vec::with_capacity(d);
    recurse(f, lo, hi, rel_tol, abs_tol, breakpoints, &mut prefix)
}

/// Iterated adaptive integration over the Euclidean ball `|u - center| <= r`.
pub fn integrate_ball(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    center: &[f64],
    r: f64,
    rel_tol: f64,
    breakpoints: &[Vec<f64>],
) -> Result<f64> {
    let d = center.len();
    if d == 0 || d > 3 {
        return Err(RigidityError::InvalidInput(format!(
            "ball integration supports d in 1..=3, got {d}"
        )));
    }
    fn recurse(
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
        center: &[f64],
        r: f64,
        rel_tol: f64,
        breakpoints: &[Vec<f64>],
        prefix: &mut Vec<f64>,
    ) -> Result<f64> {
        let axis = prefix.len();
        let d = center.len();
        // Remaining radius after fixing the leading coordinates.
        let mut rho2 = r * r;
        for (i, &x) in prefix.iter().enumerate() {
            rho2 -= (x - center[i]) * (x - center[i]);
        }
        if rho2 <= 0.0 {
            return Ok(0.0);
        }
        let rho = rho2.sqrt();
        let (lo, hi) = (center[axis] - rho, center[axis] + rho);
        let mut opt = QuadOptions {
            rel_tol,
            max_panels: 2048,
            ..Default::default()
        };
        if let Some(bp) = breakpoints.get(axis) {
            opt = opt.breakpoints(bp);
        }
        if axis == d - 1 {
            let g = |x: f64| {
                let mut u = prefix.clone();
                u.push(x);
                f(&u)
            };
            integrate(&g, lo, hi, &opt)
        } else {
            let g = |x: f64| {
                let mut pfx = prefix.clone();
                pfx.push(x);
                recurse(f, center, r, rel_tol, breakpoints, &mut pfx).unwrap_or(f64::NAN)
            };
            integrate(&g, lo, hi, &opt)
        }
    }
    let mut prefix = Vec::with_capacity(d);
    recurse(f, center, r, rel_tol, breakpoints, &mut prefix)
}
