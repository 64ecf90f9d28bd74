//! Covariance sequences of stationary lattice processes.

use crate::error::{Result, RigidityError};
use crate::index::box_window;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// How the sequence behaves beyond the stored support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailSpec {
    /// Exactly zero outside the stored support.
    Finite,
    /// Bounded by `c * ratio^{|m|}` with `ratio < 1`; the stored values are a
    /// truncation of a summable sequence.
    Geometric { ratio: f64 },
    /// No decay information: the sequence cannot be summed into a density.
    Unknown,
}

/// A symmetric positive semidefinite covariance sequence `C(m)`, `m in Z^d`,
/// stored on a finite support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceSequence {
    dim: usize,
    values: BTreeMap<Vec<i64>, f64>,
    tail: TailSpec,
}

impl CovarianceSequence {
    /// Build from explicit values. Symmetry `C(m) = C(-m)` is required (the
    /// mirror entry may be omitted and is filled in), `|C(m)| <= C(0)` is
    /// enforced, and positive semidefiniteness is spot-checked on a small
    /// Toeplitz window.
    pub fn new(dim: usize, entries: Vec<(Vec<i64>, f64)>, tail: TailSpec) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(RigidityError::InvalidInput(format!(
                "supported dimensions are 1..=3, got {dim}"
            )));
        }
        let mut values: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (m, v) in entries {
            if m.len() != dim {
                return Err(RigidityError::InvalidInput(
                    "covariance index dimension mismatch".into(),
                ));
            }
            if !v.is_finite() {
                return Err(RigidityError::InvalidInput(
                    "non-finite covariance value".into(),
                ));
            }
            let neg: Vec<i64> = m.iter().map(|x| -x).collect();
            if let Some(&w) = values.get(&neg) {
                if (w - v).abs() > 1e-12 * w.abs().max(1.0) {
                    return Err(RigidityError::InvalidInput(format!(
                        "covariance not symmetric at {m:?}: {v} vs {w}"
                    )));
                }
            }
            values.insert(neg, v);
            values.insert(m, v);
        }
        let c0 = *values.get(&vec![0i64; dim]).ok_or_else(|| {
            RigidityError::InvalidInput("covariance must define C(0)".into())
        })?;
        if c0 <= 0.0 {
            return Err(RigidityError::InvalidInput("C(0) must be positive".into()));
        }
        for (m, &v) in &values {
            if v.abs() > c0 * (1.0 + 1e-12) {
                return Err(RigidityError::InvalidInput(format!(
                    "|C({m:?})| = {v} exceeds C(0) = {c0}"
                )));
            }
        }
        let cov = CovarianceSequence { dim, values, tail };
        // A truncated summable sequence need not be PSD as stored; only
        // exactly supported sequences are spot-checked.
        if matches!(tail, TailSpec::Finite) {
            cov.check_psd_window()?;
        }
        Ok(cov)
    }

    /// Spot-check positive semidefiniteness on the Toeplitz window of radius
    /// `min(support_radius, 8)` using a symmetric eigen decomposition.
    fn check_psd_window(&self) -> Result<()> {
        let r = self.support_radius().min(8);
        let pts = box_window(self.dim, r);
        let n = pts.len();
        if n > 2_000 {
            return Ok(()); // keep constructor cheap in higher dimensions
        }
        let mut g = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let diff: Vec<i64> = pts[i].iter().zip(&pts[j]).map(|(a, b)| a - b).collect();
                g[(i, j)] = self.value(&diff);
            }
        }
        let eig = nalgebra::SymmetricEigen::new(g);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let c0 = self.c0();
        if min < -1e-8 * c0 {
            return Err(RigidityError::InvalidInput(format!(
                "covariance window is not positive semidefinite (min eigenvalue {min:.3e})"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail(&self) -> TailSpec {
        self.tail
    }

    pub fn c0(&self) -> f64 {
        self.values[&vec![0i64; self.dim]]
    }

    /// `C(m)`, zero outside the stored support (the geometric tail is a
    /// truncation bound, not extra values).
    pub fn value(&self, m: &[i64]) -> f64 {
        self.values.get(m).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = (&Vec<i64>, &f64)> {
        self.values.iter()
    }

    pub fn support_radius(&self) -> i64 {
        self.values
            .keys()
            .map(|m| m.iter().map(|x| x.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Rescale so that `C(0) = 1`.
    pub fn normalized(mut self) -> Self {
        let c0 = self.c0();
        for v in self.values.values_mut() {
            *v /= c0;
        }
        self
    }

    /// AR(1) covariance `phi^{|m|}` (unit variance), truncated where the
    /// entries drop below `1e-17`.
    pub fn ar1(phi: f64) -> Result<Self> {
        if !(phi.abs() < 1.0) {
            return Err(RigidityError::InvalidInput(
                "AR(1) parameter must satisfy |phi| < 1".into(),
            ));
        }
        if phi == 0.0 {
            return CovarianceSequence::new(1, vec![(vec![0], 1.0)], TailSpec::Finite);
        }
        let radius = ((-17.0 * std::f64::consts::LN_10) / phi.abs().ln()).ceil() as i64;
        let entries: Vec<(Vec<i64>, f64)> = (0..=radius)
            .map(|m| (vec![m], phi.powi(m as i32)))
            .collect();
        CovarianceSequence::new(1, entries, TailSpec::Geometric { ratio: phi.abs() })
    }

    /// Moving-average covariance `C = b * reversed(b)` (autocorrelation of a
    /// finite filter), positive semidefinite by construction.
    pub fn from_filter(dim: usize, filter: &BTreeMap<Vec<i64>, f64>) -> Result<Self> {
        if filter.is_empty() {
            return Err(RigidityError::InvalidInput("empty filter".into()));
        }
        let mut acc: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (m1, v1) in filter {
            for (m2, v2) in filter {
                let lag: Vec<i64> = m1.iter().zip(m2).map(|(a, b)| a - b).collect();
                *acc.entry(lag).or_insert(0.0) += v1 * v2;
            }
        }
        CovarianceSequence::new(dim, acc.into_iter().collect(), TailSpec::Finite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_in_symmetry() {
        let c = CovarianceSequence::new(
            1,
            vec![(vec![0], 2.0), (vec![1], -1.0)],
            TailSpec::Finite,
        )
        .unwrap();
        assert_eq!(c.value(&[-1]), -1.0);
        assert_eq!(c.value(&[5]), 0.0);
        assert_eq!(c.support_radius(), 1);
    }

    #[test]
    fn rejects_non_psd() {
        // C(0)=1, C(+-1)=0.9, C(+-2)=-0.9 is far from PSD
        let r = CovarianceSequence::new(
            1,
            vec![(vec![0], 1.0), (vec![1], 0.9), (vec![2], -0.9)],
            TailSpec::Finite,
        );
        assert!(r.is_err());
    }

    #[test]
    fn ar1_truncation_is_tiny() {
        let c = CovarianceSequence::ar1(0.5).unwrap();
        let r = c.support_radius();
        assert!(0.5f64.powi(r as i32) < 1e-16);
        assert!((c.value(&[3]) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn filter_autocorrelation_is_psd() {
        let mut f = BTreeMap::new();
        f.insert(vec![0i64], 1.0);
        f.insert(vec![1i64], -1.0);
        let c = CovarianceSequence::from_filter(1, &f).unwrap();
        assert_eq!(c.value(&[0]), 2.0);
        assert_eq!(c.value(&[1]), -1.0);
        assert_eq!(c.value(&[-1]), -1.0);
    }
}
