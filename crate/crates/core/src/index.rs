//! Multi-indices for derivatives/monomials and lattice index windows.

use serde::{Deserialize, Serialize};

/// A multi-index `k = (k_1, ..., k_d)` of nonnegative integers, used both for
/// derivative orders (rigidity order) and monomial exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(k: Vec<u32>) -> Self {
        MultiIndex(k)
    }

    /// Zero multi-index in dimension `d` (the mass functional).
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total order `|k| = k_1 + ... + k_d`.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Componentwise partial order: `self <= other` in every coordinate.
    pub fn leq(&self, other: &MultiIndex) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `prod_i x_i^{k_i}`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&k, &xi)| xi.powi(k as i32))
            .product()
    }

    /// `prod_i m_i^{k_i}` over signed lattice points (0^0 = 1).
    pub fn monomial_i64(&self, m: &[i64]) -> f64 {
        self.0
            .iter()
            .zip(m)
            .map(|(&k, &mi)| (mi as f64).powi(k as i32))
            .product()
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// All multi-indices in dimension `d` with total order at most `cap`,
/// in lexicographic order (deterministic).
pub fn multi_indices_up_to(d: usize, cap: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    loop {
        if cur.iter().sum::<u32>() <= cap {
            out.push(MultiIndex(cur.clone()));
        }
        // odometer over [0, cap]^d
        let mut i = d;
        loop {
            if i == 0 {
                out.sort();
                return out;
            }
            i -= 1;
            if cur[i] < cap {
                cur[i] += 1;
                for c in cur.iter_mut().skip(i + 1) {
                    *c = 0;
                }
                break;
            }
        }
    }
}

/// Lattice points `n` with `|n|_inf <= r`, lexicographic order.
pub fn box_window(d: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = vec![-r; d];
    loop {
        out.push(cur.clone());
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < r {
                cur[i] += 1;
                for c in cur.iter_mut().skip(i + 1) {
                    *c = -r;
                }
                break;
            }
        }
    }
}

/// Lattice points in the annulus `m < |n|_inf <= n_outer`, lexicographic order.
pub fn annulus(d: usize, m: i64, n_outer: i64) -> Vec<Vec<i64>> {
    box_window(d, n_outer)
        .into_iter()
        .filter(|p| p.iter().map(|x| x.abs()).max().unwrap() > m)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_order_and_total() {
        let ks = multi_indices_up_to(2, 2);
        assert_eq!(ks.len(), 6); // (0,0),(0,1),(0,2),(1,0),(1,1),(2,0)
        assert!(ks.contains(&MultiIndex(vec![1, 1])));
        assert_eq!(MultiIndex(vec![1, 1]).total(), 2);
        assert!(MultiIndex(vec![1, 0]).leq(&MultiIndex(vec![1, 1])));
        assert!(!MultiIndex(vec![2, 0]).leq(&MultiIndex(vec![1, 1])));
    }

    #[test]
    fn window_and_annulus_counts() {
        assert_eq!(box_window(1, 3).len(), 7);
        assert_eq!(box_window(2, 2).len(), 25);
        assert_eq!(annulus(1, 1, 4).len(), 6); // -4..-2 and 2..4
        assert_eq!(annulus(2, 0, 1).len(), 8);
    }

    #[test]
    fn monomial_values() {
        let k = MultiIndex(vec![2, 1]);
        assert_eq!(k.monomial(&[2.0, 3.0]), 12.0);
        assert_eq!(MultiIndex(vec![0, 0]).monomial_i64(&[0, 5]), 1.0);
    }
}
