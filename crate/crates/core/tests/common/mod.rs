//! Shared helpers for the acceptance suite: an independent conditional
//! variance oracle and plain quadrature, deliberately avoiding the library's
//! own solvers and integration code.

use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

/// Composite trapezoid rule; spectrally accurate for smooth periodic
/// integrands over a full period.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for i in 1..n {
        acc += f(a + h * i as f64);
    }
    acc * h
}

/// Moving-average model: the field is `X_n = sum_j a_j W_{n+j}` with unit
/// white noise `W`, so `Cov(X_n, X_0) = sum_j a_j a_{j+n}` exactly.
pub struct FilterModel {
    pub d: usize,
    pub taps: BTreeMap<Vec<i64>, f64>,
}

impl FilterModel {
    pub fn cov(&self, lag: &[i64]) -> f64 {
        let mut acc = 0.0;
        for (j, &aj) in &self.taps {
            let shifted: Vec<i64> = j.iter().zip(lag).map(|(a, b)| a + b).collect();
            if let Some(&ak) = self.taps.get(&shifted) {
                acc += aj * ak;
            }
        }
        acc
    }

    /// Minimum and maximum of `|sum_j a_j e^{i j u}|^2` on a coarse grid,
    /// used to reject nearly singular draws.
    pub fn spectral_range(&self, grid: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        let step = 2.0 * std::f64::consts::PI / grid as f64;
        let mut point = vec![0usize; self.d];
        loop {
            let u: Vec<f64> = point.iter().map(|&i| i as f64 * step).collect();
            let mut re = 0.0;
            let mut im = 0.0;
            for (j, &aj) in &self.taps {
                let phase: f64 = j.iter().zip(&u).map(|(&ji, &ui)| ji as f64 * ui).sum();
                re += aj * phase.cos();
                im += aj * phase.sin();
            }
            let p = re * re + im * im;
            lo = lo.min(p);
            hi = hi.max(p);
            let mut axis = 0;
            loop {
                if axis == self.d {
                    return (lo, hi);
                }
                point[axis] += 1;
                if point[axis] < grid {
                    break;
                }
                point[axis] = 0;
                axis += 1;
            }
        }
    }
}

fn cheb_norm(n: &[i64]) -> i64 {
    n.iter().map(|x| x.abs()).max().unwrap_or(0)
}

fn lattice_box(d: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for p in &out {
            for c in -r..=r {
                let mut q = p.clone();
                q.push(c);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Conditional variance of the window statistic `sum_{|n| <= m} n^k X_n`
/// given the annulus `m < |n| <= n_outer`, computed from the joint Gaussian
/// covariance by a full-pivot LU Schur complement.
pub fn schur_conditional_variance(
    model: &FilterModel,
    m: i64,
    n_outer: i64,
    k: &[u32],
) -> f64 {
    let weight = |n: &[i64]| -> f64 {
        n.iter()
            .zip(k)
            .map(|(&ni, &ki)| (ni as f64).powi(ki as i32))
            .product()
    };
    let window: Vec<Vec<i64>> = lattice_box(model.d, m);
    let annulus: Vec<Vec<i64>> = lattice_box(model.d, n_outer)
        .into_iter()
        .filter(|n| cheb_norm(n) > m)
        .collect();

    let mut var_t = 0.0;
    for a in &window {
        for b in &window {
            let lag: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            var_t += weight(a) * weight(b) * model.cov(&lag);
        }
    }

    let n = annulus.len();
    let g = DMatrix::from_fn(n, n, |i, j| {
        let lag: Vec<i64> = annulus[i]
            .iter()
            .zip(&annulus[j])
            .map(|(x, y)| x - y)
            .collect();
        model.cov(&lag)
    });
    let c = DVector::from_fn(n, |i, _| {
        let mut acc = 0.0;
        for w in &window {
            let lag: Vec<i64> = annulus[i].iter().zip(w).map(|(x, y)| x - y).collect();
            acc += weight(w) * model.cov(&lag);
        }
        acc
    });

    let x = g
        .full_piv_lu()
        .solve(&c)
        .expect("oracle Gram matrix should be invertible");
    var_t - c.dot(&x)
}

/// One pass/fail line per criterion, printed before any assertion fires.
pub fn criterion_line(n: u32, pass: bool, detail: &str) {
    println!(
        "criterion {n}: {} - {detail}",
        if pass { "pass" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} failed: {detail}");
}
