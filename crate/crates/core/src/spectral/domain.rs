//! Frequency domains.

use crate::error::{Result, RigidityError};
use serde::{Deserialize, Serialize};

/// Frequency domain of a spectral density.
///
/// `Torus(d)` is `[-pi, pi)^d`, dual to the lattice `Z^d` (discrete
/// processes). `Euclidean(d)` is `R^d`, dual to continuous processes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Torus { d: usize },
    Euclidean { d: usize },
}

impl Domain {
    pub fn torus(d: usize) -> Self {
        Domain::Torus { d }
    }

    pub fn euclidean(d: usize) -> Self {
        Domain::Euclidean { d }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Domain::Torus { d } | Domain::Euclidean { d } => d,
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, Domain::Torus { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 || d > 3 {
            return Err(RigidityError::InvalidInput(format!(
                "supported dimensions are 1..=3, got {d}"
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Domain::Torus { d } => write!(f, "torus(d={d})"),
            Domain::Euclidean { d } => write!(f, "euclidean(d={d})"),
        }
    }
}
