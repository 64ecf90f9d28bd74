//! Pole detection for reciprocal spectral densities and the rigidity
//! classifier built on top of it.
//!
//! A derivative order `k` is certified rigid when every local test
//! polynomial with a nonzero `u^k` coefficient has infinite energy
//! `int |p|^2 / s` near the origin. Two certificates are implemented:
//!
//! * the radial route integrates `rho^{2|k|} / sup_dirs s` over dyadic
//!   shells and certifies divergence by the fitted shell ratio;
//! * the Gram route assembles moment matrices of `1/(s + delta)` over a
//!   regularisation ladder, extracts the subspace of polynomials whose
//!   energy stays bounded as `delta -> 0`, and checks whether the `u^k`
//!   coordinate is reachable from that subspace.
//!
//! A failed certificate alone proves nothing; converse conclusions need
//! structural hypotheses (validated point zeros, isotropy, separability)
//! carried by the density flags.

pub mod gram;
pub mod order;
pub mod radial;
pub mod simple;

use serde::Serialize;

use crate::error::{Result, RigidityError};
use crate::index::MultiIndex;
use crate::spectral::density::SpectralDensity;
use crate::spectral::ladder::LadderConfig;

pub use gram::{gram_pole_test, GramConfig, GramPoleReport, GramStatus};
pub use order::{finite_pole_order, FiniteOrderConfig, PoleOrderReport};
pub use radial::{radial_pole_test, RadialConfig, RadialPoleReport};
pub use simple::{classify_simple, SimpleConfig, SimpleReport};

/// Outcome of a single pole test at a derivative order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PoleVerdict {
    /// Certified non-integrable: the weighted reciprocal density diverges.
    Pole,
    /// A finite-energy witness with the required coefficient exists.
    NoPole,
    Undetermined,
}

/// A polynomial in the monomial basis, used as a non-rigidity witness.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub monomials: Vec<MultiIndex>,
    /// Unit l2-norm coefficient vector aligned with `monomials`.
    pub coefficients: Vec<f64>,
}

impl Witness {
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.monomials
            .iter()
            .zip(&self.coefficients)
            .map(|(m, c)| c * m.monomial(u))
            .sum()
    }

    /// Coefficient of the monomial `k`, zero when `k` is outside the basis.
    pub fn coefficient(&self, k: &MultiIndex) -> f64 {
        self.monomials
            .iter()
            .position(|m| m == k)
            .map_or(0.0, |i| self.coefficients[i])
    }
}

/// Final rigidity verdict for a derivative order `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RigidityVerdict {
    /// The order-`k` linear statistic is determined by the outside
    /// configuration (a pole certificate holds).
    KRigid,
    /// A converse theorem applies and rules rigidity out.
    NotKRigid,
    /// No pole certificate was found, but no converse hypothesis is
    /// available, so non-rigidity cannot be concluded.
    SufficientOnly,
    Undetermined,
}

/// Which argument produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    /// Divergent dyadic-shell ladder of the reciprocal density.
    RadialDivergence,
    /// The `u^k` coordinate is orthogonal to the bounded-energy span.
    GramNullspace,
    /// Converse for densities with validated isolated point zeros.
    SimpleConverse,
    /// Converse for rotation-invariant densities.
    IsotropicConverse,
    /// Converse for densities with product structure.
    SeparableConverse,
    Inconclusive,
}

/// Tuning for [`rigidity_classifier`].
#[derive(Debug, Clone)]
pub struct ClassifierConfig {
    /// Ball radius around the origin examined by the radial route.
    pub eps: f64,
    pub ladder: LadderConfig,
    /// Also run the Gram route when the radial route does not certify a
    /// pole (needed for anisotropic zero sets).
    pub use_gram: bool,
    pub gram: GramConfig,
    pub simple: SimpleConfig,
    /// Re-run the classifier on all componentwise-smaller orders and
    /// demand that rigidity is downward closed.
    pub check_downward_closure: bool,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            eps: 0.5,
            ladder: LadderConfig::default(),
            use_gram: false,
            gram: GramConfig::default(),
            simple: SimpleConfig::default(),
            check_downward_closure: false,
        }
    }
}

/// Everything the classifier observed for a single order `k`.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub label: String,
    pub k: MultiIndex,
    pub verdict: RigidityVerdict,
    pub provenance: Provenance,
    pub radial: RadialPoleReport,
    pub gram: Option<GramPoleReport>,
    /// Finite-energy witness backing a NoPole observation, when available.
    pub witness: Option<Witness>,
    /// Set when the downward-closure audit ran: `false` means some smaller
    /// order was certified non-rigid while `k` was certified rigid.
    pub closure_consistent: Option<bool>,
    pub notes: Vec<String>,
}

/// Classify rigidity of the order-`k` linear statistic for the measure with
/// spectral density `s`.
///
/// The radial certificate always runs; the Gram certificate runs on demand.
/// A pole certificate yields `KRigid`. Without one, the density flags
/// decide whether a converse theorem applies (`NotKRigid`) or the result
/// stays `SufficientOnly`.
pub fn rigidity_classifier(
    s: &SpectralDensity,
    k: &MultiIndex,
    cfg: &ClassifierConfig,
) -> Result<ClassificationReport> {
    let d = s.dim();
    if k.dim() != d {
        return Err(RigidityError::InvalidInput(format!(
            "order {k} does not match density dimension {d}"
        )));
    }
    let origin = vec![0.0; d];
    let radial_cfg = RadialConfig {
        eps: cfg.eps,
        ladder: cfg.ladder.clone(),
    };
    let radial = radial_pole_test(s, &origin, k, &radial_cfg)?;

    let mut notes = Vec::new();
    let mut gram_report = None;
    let mut witness = None;
    let mut pole = radial.verdict;
    let mut pole_provenance = Provenance::RadialDivergence;

    if cfg.use_gram && pole != PoleVerdict::Pole {
        let mut gcfg = cfg.gram.clone();
        gcfg.degree = gcfg.degree.max(k.total());
        let g = gram_pole_test(s, &origin, &gcfg)?;
        match g.entry(k) {
            Some(entry) => {
                match entry.verdict {
                    PoleVerdict::Pole => {
                        pole = PoleVerdict::Pole;
                        pole_provenance = Provenance::GramNullspace;
                    }
                    PoleVerdict::NoPole => {
                        witness = entry.witness.clone();
                        if pole == PoleVerdict::Undetermined {
                            pole = PoleVerdict::NoPole;
                            notes.push(
                                "radial route undetermined; NoPole taken from Gram witness".into(),
                            );
                        }
                    }
                    PoleVerdict::Undetermined => {}
                }
                if entry.verdict == PoleVerdict::Undetermined && g.status != GramStatus::Resolved {
                    notes.push(format!("gram route unresolved: {:?}", g.status));
                }
            }
            None => notes.push("order outside the Gram monomial basis".into()),
        }
        gram_report = Some(g);
    }

    let (verdict, provenance) = match pole {
        PoleVerdict::Pole => (RigidityVerdict::KRigid, pole_provenance),
        PoleVerdict::Undetermined => (RigidityVerdict::Undetermined, Provenance::Inconclusive),
        PoleVerdict::NoPole => converse_verdict(s, cfg, &mut notes)?,
    };

    let mut closure_consistent = None;
    let mut final_verdict = verdict;
    if cfg.check_downward_closure && verdict == RigidityVerdict::KRigid {
        let mut consistent = true;
        let sub = ClassifierConfig {
            check_downward_closure: false,
            ..cfg.clone()
        };
        for smaller in smaller_orders(k) {
            let rep = rigidity_classifier(s, &smaller, &sub)?;
            if rep.verdict == RigidityVerdict::NotKRigid {
                consistent = false;
                notes.push(format!(
                    "downward closure violated: {k} certified rigid but {smaller} certified non-rigid"
                ));
            }
        }
        closure_consistent = Some(consistent);
        if !consistent {
            final_verdict = RigidityVerdict::Undetermined;
        }
    }

    Ok(ClassificationReport {
        label: s.label().to_string(),
        k: k.clone(),
        verdict: final_verdict,
        provenance: if final_verdict == RigidityVerdict::Undetermined
            && verdict == RigidityVerdict::KRigid
        {
            Provenance::Inconclusive
        } else {
            provenance
        },
        radial,
        gram: gram_report,
        witness,
        closure_consistent,
        notes,
    })
}

/// Walk the structural flags and apply the strongest available converse.
fn converse_verdict(
    s: &SpectralDensity,
    cfg: &ClassifierConfig,
    notes: &mut Vec<String>,
) -> Result<(RigidityVerdict, Provenance)> {
    let flags = s.flags();
    if flags.simple {
        let report = classify_simple(s, &cfg.simple)?;
        if report.simple {
            return Ok((RigidityVerdict::NotKRigid, Provenance::SimpleConverse));
        }
        notes.push(format!(
            "simple flag not validated: {}",
            report.reasons.join("; ")
        ));
    }
    if flags.isotropic {
        return Ok((RigidityVerdict::NotKRigid, Provenance::IsotropicConverse));
    }
    if flags.separable {
        return Ok((RigidityVerdict::NotKRigid, Provenance::SeparableConverse));
    }
    Ok((RigidityVerdict::SufficientOnly, Provenance::Inconclusive))
}

/// All orders strictly below `k` in the componentwise partial order.
fn smaller_orders(k: &MultiIndex) -> Vec<MultiIndex> {
    let d = k.dim();
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    loop {
        let cand = MultiIndex::new(cur.clone());
        if cand.leq(k) && &cand != k {
            out.push(cand);
        }
        let mut i = d;
        loop {
            if i == 0 {
                out.sort();
                return out;
            }
            i -= 1;
            if cur[i] < k.0[i] {
                cur[i] += 1;
                for c in cur.iter_mut().skip(i + 1) {
                    *c = 0;
                }
                break;
            }
            cur[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smaller_orders_enumerates_strictly_dominated_indices() {
        let k = MultiIndex::new(vec![1, 2]);
        let got = smaller_orders(&k);
        assert_eq!(got.len(), 5); // (0,0) (0,1) (0,2) (1,0) (1,1)
        assert!(got.iter().all(|m| m.leq(&k) && m != &k));
    }

    #[test]
    fn witness_eval_and_coefficient_lookup() {
        let w = Witness {
            monomials: vec![MultiIndex::new(vec![1, 0]), MultiIndex::new(vec![0, 1])],
            coefficients: vec![0.6, -0.8],
        };
        assert!((w.eval(&[2.0, 1.0]) - 0.4).abs() < 1e-15);
        assert_eq!(w.coefficient(&MultiIndex::new(vec![0, 1])), -0.8);
        assert_eq!(w.coefficient(&MultiIndex::new(vec![2, 0])), 0.0);
    }
}
