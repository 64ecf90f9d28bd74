//! Gaussian sampling of stationary lattice processes.
//!
//! Realizations live on a periodic grid obtained by circulant embedding of
//! the covariance sequence. For a grid of side `M` the embedding is exact:
//! eigenvalues of the circulant extension are the DFT of the wrapped
//! covariance, and they are nonnegative whenever the wrapped sequence is
//! positive semidefinite. Sampling one complex field and splitting real and
//! imaginary parts yields two independent realizations per FFT.
//!
//! Replicates are deterministic: replicate `2p` and `2p + 1` come from ChaCha
//! stream `p` of the sampler seed, so any replicate can be regenerated in
//! isolation and parallel consumers see the same values in any order.

use crate::error::{Result, RigidityError};
use crate::predictor::{PredictionTarget, PredictorReport};
use crate::spectral::covariance::{CovarianceSequence, TailSpec};
use crate::spectral::density::SpectralDensity;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Relative tolerance for negative circulant eigenvalues. Dips within
/// `tol * max_eig` are treated as round-off and clamped to zero; anything
/// larger fails the embedding.
const EMBED_TOL: f64 = 1e-8;

/// Exact sampler for a stationary Gaussian field on a periodic lattice grid.
pub struct LatticeSampler {
    dims: Vec<usize>,
    sqrt_eigs: Vec<f64>,
    seed: u64,
    /// Largest window radius whose covariance the grid reproduces exactly.
    extent: i64,
    /// Magnitude of the largest eigenvalue clamped to zero.
    clamp: f64,
    inverse: Arc<dyn Fft<f64>>,
}

impl LatticeSampler {
    /// Build a sampler whose grid reproduces `cov` exactly on every pair of
    /// sites within `|n|_inf <= extent`. The grid side is the next power of
    /// two past `2 * extent + support + 1`, so wrapped lags never alias into
    /// the window.
    pub fn new(cov: &CovarianceSequence, extent: i64, seed: u64) -> Result<Self> {
        if extent < 0 {
            return Err(RigidityError::InvalidInput(
                "sampler extent must be nonnegative".into(),
            ));
        }
        let support = cov.support_radius();
        let side = (2 * extent + support + 1)
            .max(2 * support + 2)
            .max(8) as usize;
        Self::on_ring(cov, side.next_power_of_two(), seed)
    }

    /// Build a sampler on a ring of the given side. The exact window is
    /// whatever the side affords: `extent = (side - support - 1) / 2`.
    pub fn on_ring(cov: &CovarianceSequence, side: usize, seed: u64) -> Result<Self> {
        let d = cov.dim();
        if d > 2 {
            return Err(RigidityError::InvalidInput(
                "sampling supports dimensions 1 and 2".into(),
            ));
        }
        if !side.is_power_of_two() {
            return Err(RigidityError::InvalidInput(format!(
                "grid side {side} is not a power of two"
            )));
        }
        let support = cov.support_radius();
        if (side as i64) < 2 * support + 2 {
            return Err(RigidityError::EmbeddingFailure(format!(
                "side {side} cannot hold the covariance support {support} without aliasing"
            )));
        }
        match cov.tail() {
            TailSpec::Finite => {}
            TailSpec::Geometric { ratio } => {
                // The stored truncation must already be negligible, otherwise
                // the wrapped circulant misrepresents the process.
                let boundary = cov
                    .support()
                    .filter(|(m, _)| m.iter().map(|x| x.abs()).max() == Some(support))
                    .map(|(_, v)| v.abs())
                    .fold(0.0f64, f64::max);
                if boundary / (1.0 - ratio) > 1e-10 * cov.c0() {
                    return Err(RigidityError::EmbeddingFailure(
                        "covariance tail is truncated too early for exact embedding".into(),
                    ));
                }
            }
            TailSpec::Unknown => {
                return Err(RigidityError::EmbeddingFailure(
                    "covariance tail is unknown; sampling needs a summable tail".into(),
                ));
            }
        }
        let dims = vec![side; d];
        let total: usize = dims.iter().product();

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(side);
        let inverse = planner.plan_fft_inverse(side);

        // Wrapped covariance of the circulant extension, then its DFT.
        let mut buf = vec![Complex::new(0.0, 0.0); total];
        let mut lag = vec![0i64; d];
        for (idx, slot) in buf.iter_mut().enumerate() {
            let mut rem = idx;
            for a in (0..d).rev() {
                let j = (rem % side) as i64;
                rem /= side;
                lag[a] = if j <= (side / 2) as i64 {
                    j
                } else {
                    j - side as i64
                };
            }
            *slot = Complex::new(cov.value(&lag), 0.0);
        }
        fft_along_axes(&mut buf, &dims, &forward);

        let mut max_eig = 0.0f64;
        for z in &buf {
            max_eig = max_eig.max(z.re);
        }
        let mut clamp = 0.0f64;
        let mut sqrt_eigs = Vec::with_capacity(total);
        for z in &buf {
            if z.re < 0.0 {
                if z.re < -EMBED_TOL * max_eig {
                    return Err(RigidityError::EmbeddingFailure(format!(
                        "circulant eigenvalue {:.3e} is negative beyond tolerance",
                        z.re
                    )));
                }
                clamp = clamp.max(-z.re);
                sqrt_eigs.push(0.0);
            } else {
                sqrt_eigs.push(z.re.sqrt());
            }
        }

        Ok(LatticeSampler {
            dims,
            sqrt_eigs,
            seed,
            extent: ((side as i64 - support - 1) / 2).max(0),
            clamp,
            inverse,
        })
    }

    /// Build a sampler directly from a torus density sampled on the dual
    /// grid: eigenvalues are `(2 pi)^d s(u_k)`. The implied grid covariance
    /// is the wrapped sum of the true one, so the bias at any fixed lag
    /// decays with the grid side for summable covariances.
    pub fn from_density(s: &SpectralDensity, grid: usize, seed: u64) -> Result<Self> {
        if !s.domain().is_torus() {
            return Err(RigidityError::InvalidInput(
                "grid sampling needs a torus density".into(),
            ));
        }
        if !s.atoms().is_empty() {
            return Err(RigidityError::InvalidInput(
                "grid sampling supports absolutely continuous spectra".into(),
            ));
        }
        let d = s.dim();
        if d > 2 {
            return Err(RigidityError::InvalidInput(
                "sampling supports dimensions 1 and 2".into(),
            ));
        }
        let side = grid.max(8).next_power_of_two();
        let dims = vec![side; d];
        let total: usize = dims.iter().product();
        let mut planner = FftPlanner::new();
        let inverse = planner.plan_fft_inverse(side);

        let scale = (2.0 * PI).powi(d as i32);
        let mut evals = Vec::with_capacity(total);
        let mut u = vec![0.0f64; d];
        for idx in 0..total {
            let mut rem = idx;
            for a in (0..d).rev() {
                let j = rem % side;
                rem /= side;
                let signed = if j <= side / 2 {
                    j as f64
                } else {
                    j as f64 - side as f64
                };
                u[a] = 2.0 * PI * signed / side as f64;
            }
            let v = s.eval(&u);
            if !v.is_finite() {
                return Err(RigidityError::InvalidInput(format!(
                    "density is not finite at grid frequency {u:?}"
                )));
            }
            evals.push(v);
        }
        let max_eval = evals.iter().cloned().fold(0.0f64, f64::max);
        let min_eval = evals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eval < -EMBED_TOL * max_eval.max(1e-300) {
            return Err(RigidityError::EmbeddingFailure(format!(
                "density is negative on the sampling grid (min {min_eval:.3e})"
            )));
        }
        let sqrt_eigs = evals
            .into_iter()
            .map(|v| (scale * v.max(0.0)).sqrt())
            .collect();

        Ok(LatticeSampler {
            dims,
            sqrt_eigs,
            seed,
            extent: (side / 4) as i64,
            clamp: 0.0,
            inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    /// Grid side lengths, one per axis.
    pub fn grid(&self) -> &[usize] {
        &self.dims
    }

    /// Window radius within which pair covariances are reproduced exactly.
    pub fn extent(&self) -> i64 {
        self.extent
    }

    /// Magnitude of the largest eigenvalue clamped during embedding.
    pub fn eigen_clamp(&self) -> f64 {
        self.clamp
    }

    /// Row-major grid index of a lattice site, wrapping periodically.
    pub fn site_index(&self, site: &[i64]) -> usize {
        debug_assert_eq!(site.len(), self.dims.len());
        let mut idx = 0usize;
        for (a, &n) in site.iter().enumerate() {
            let side = self.dims[a] as i64;
            idx = idx * self.dims[a] + n.rem_euclid(side) as usize;
        }
        idx
    }

    /// Two independent realizations from one ChaCha stream and one FFT.
    pub fn replicate_pair(&self, pair: u64) -> (Vec<f64>, Vec<f64>) {
        let total: usize = self.dims.iter().product();
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(pair);
        let mut buf: Vec<Complex<f64>> = (0..total)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                Complex::new(a, b)
            })
            .collect();
        for (z, s) in buf.iter_mut().zip(&self.sqrt_eigs) {
            *z *= *s;
        }
        fft_along_axes(&mut buf, &self.dims, &self.inverse);
        let norm = 1.0 / (total as f64).sqrt();
        let re = buf.iter().map(|z| z.re * norm).collect();
        let im = buf.iter().map(|z| z.im * norm).collect();
        (re, im)
    }

    /// Realization `r`; even and odd indices share a stream but are
    /// independent fields.
    pub fn replicate(&self, r: u64) -> Vec<f64> {
        let (re, im) = self.replicate_pair(r / 2);
        if r % 2 == 0 {
            re
        } else {
            im
        }
    }
}

/// In-place FFT along every axis of a row-major buffer. All axes share one
/// plan because the grid is square.
fn fft_along_axes(data: &mut [Complex<f64>], dims: &[usize], fft: &Arc<dyn Fft<f64>>) {
    let d = dims.len();
    let mut line = vec![Complex::new(0.0, 0.0); 0];
    for axis in 0..d {
        let len = dims[axis];
        let stride: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        if stride == 1 {
            for o in 0..outer {
                fft.process(&mut data[o * len..(o + 1) * len]);
            }
            continue;
        }
        line.resize(len, Complex::new(0.0, 0.0));
        for o in 0..outer {
            for s in 0..stride {
                let base = o * len * stride + s;
                for i in 0..len {
                    line[i] = data[base + i * stride];
                }
                fft.process(&mut line);
                for i in 0..len {
                    data[base + i * stride] = line[i];
                }
            }
        }
    }
}

/// One empirical covariance entry against its target.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CovarianceCheck {
    pub lag: Vec<i64>,
    pub expected: f64,
    pub empirical: f64,
    /// `4 C(0) / sqrt(R)`: a conservative Gaussian band, since the spatial
    /// average over the grid only lowers the estimator variance.
    pub band: f64,
}

impl CovarianceCheck {
    pub fn within_band(&self) -> bool {
        (self.empirical - self.expected).abs() <= self.band
    }
}

/// Empirical covariances over `replicates` realizations, spatially averaged
/// over the periodic grid, for all lags with `|m|_inf <= max_lag` and first
/// nonzero coordinate positive (plus the zero lag).
pub fn empirical_covariance_check(
    sampler: &LatticeSampler,
    cov: &CovarianceSequence,
    replicates: usize,
    max_lag: i64,
) -> Result<Vec<CovarianceCheck>> {
    if cov.dim() != sampler.dim() {
        return Err(RigidityError::InvalidInput(
            "covariance dimension does not match the sampler".into(),
        ));
    }
    if max_lag > sampler.extent() {
        return Err(RigidityError::InvalidInput(format!(
            "lag {max_lag} exceeds the exact window of the grid ({})",
            sampler.extent()
        )));
    }
    if replicates == 0 {
        return Err(RigidityError::InvalidInput(
            "need at least one replicate".into(),
        ));
    }
    let d = sampler.dim();
    let lags: Vec<Vec<i64>> = crate::index::box_window(d, max_lag)
        .into_iter()
        .filter(|m| {
            m.iter()
                .find(|&&x| x != 0)
                .map(|&x| x > 0)
                .unwrap_or(true)
        })
        .collect();
    let total: usize = sampler.grid().iter().product();

    // Precompute the wrapped partner index of every grid point per lag.
    let side = sampler.grid()[0] as i64;
    let mut partners: Vec<Vec<usize>> = Vec::with_capacity(lags.len());
    for lag in &lags {
        let mut p = Vec::with_capacity(total);
        let mut site = vec![0i64; d];
        for idx in 0..total {
            let mut rem = idx;
            for a in (0..d).rev() {
                site[a] = (rem % side as usize) as i64 + lag[a];
                rem /= side as usize;
            }
            p.push(sampler.site_index(&site));
        }
        partners.push(p);
    }

    let mut sums = vec![0.0f64; lags.len()];
    let mut used = 0usize;
    let mut pair = 0u64;
    while used < replicates {
        let (re, im) = sampler.replicate_pair(pair);
        pair += 1;
        for field in [&re, &im] {
            if used >= replicates {
                break;
            }
            for (li, p) in partners.iter().enumerate() {
                let mut acc = 0.0;
                for (j, &pj) in p.iter().enumerate() {
                    acc += field[j] * field[pj];
                }
                sums[li] += acc / total as f64;
            }
            used += 1;
        }
    }

    let band = 4.0 * cov.c0() / (replicates as f64).sqrt();
    Ok(lags
        .into_iter()
        .zip(sums)
        .map(|(lag, s)| CovarianceCheck {
            expected: cov.value(&lag),
            empirical: s / replicates as f64,
            lag,
            band,
        })
        .collect())
}

/// Monte Carlo calibration of a linear predictor against realizations.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PredictionCalibration {
    pub replicates: usize,
    pub certified_variance: f64,
    pub sample_mean: f64,
    pub sample_variance: f64,
    /// `mean / (sigma / sqrt(R))`: standard normal when the predictor is
    /// unbiased.
    pub mean_z: f64,
    /// `(sample_var - sigma^2) / (sigma^2 sqrt(2 / (R - 1)))`: approximately
    /// standard normal when the certified variance is correct.
    pub variance_z: f64,
}

/// Replay the prediction error `T(window) - h' X(annulus)` over `replicates`
/// realizations and compare its moments with the certified residual.
pub fn prediction_calibration(
    sampler: &LatticeSampler,
    target: &PredictionTarget,
    report: &PredictorReport,
    replicates: usize,
) -> Result<PredictionCalibration> {
    if replicates < 2 {
        return Err(RigidityError::InvalidInput(
            "calibration needs at least two replicates".into(),
        ));
    }
    if report.n_outer > sampler.extent() {
        return Err(RigidityError::InvalidInput(format!(
            "annulus radius {} exceeds the exact window of the grid ({})",
            report.n_outer,
            sampler.extent()
        )));
    }
    let d = sampler.dim();
    let weights = target.weights(d, report.m)?;
    let window: Vec<(usize, f64)> = weights
        .iter()
        .map(|(n, &w)| (sampler.site_index(n), w))
        .collect();
    let annulus: Vec<(usize, f64)> = report
        .sites
        .iter()
        .zip(&report.coefficients)
        .map(|(n, &h)| (sampler.site_index(n), h))
        .collect();

    // Welford accumulation keeps the pass single and deterministic.
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    let mut used = 0usize;
    let mut pair = 0u64;
    while used < replicates {
        let (re, im) = sampler.replicate_pair(pair);
        pair += 1;
        for field in [&re, &im] {
            if used >= replicates {
                break;
            }
            let mut e = 0.0;
            for &(idx, w) in &window {
                e += w * field[idx];
            }
            for &(idx, h) in &annulus {
                e -= h * field[idx];
            }
            used += 1;
            let delta = e - mean;
            mean += delta / used as f64;
            m2 += delta * (e - mean);
        }
    }
    let sample_variance = m2 / (replicates as f64 - 1.0);
    let sigma2 = report.residual_variance;
    // Degenerate certified variances are compared on the scale of the target
    // statistic instead of the residual.
    let floor = 1e-10 * report.target_variance.max(1e-300);
    let denom_mean = (sigma2.max(floor)).sqrt() / (replicates as f64).sqrt();
    let denom_var = sigma2.max(floor) * (2.0 / (replicates as f64 - 1.0)).sqrt();
    Ok(PredictionCalibration {
        replicates,
        certified_variance: sigma2,
        sample_mean: mean,
        sample_variance,
        mean_z: mean / denom_mean,
        variance_z: (sample_variance - sigma2) / denom_var,
    })
}

/// Where the sampled process comes from.
#[derive(Clone)]
pub enum SimulationSource {
    Density(SpectralDensity),
    Covariance(CovarianceSequence),
}

impl SimulationSource {
    pub fn dim(&self) -> usize {
        match self {
            SimulationSource::Density(s) => s.dim(),
            SimulationSource::Covariance(c) => c.dim(),
        }
    }
}

/// A complete, reproducible sampling job.
#[derive(Clone)]
pub struct SimulationSpec {
    pub source: SimulationSource,
    /// Grid side; must be a power of two for the embedding.
    pub grid: usize,
    pub seed: u64,
    pub replicates: usize,
}

impl SimulationSpec {
    fn validate(&self) -> Result<()> {
        if !self.grid.is_power_of_two() {
            return Err(RigidityError::InvalidInput(format!(
                "grid side {} is not a power of two",
                self.grid
            )));
        }
        if self.replicates == 0 {
            return Err(RigidityError::InvalidInput(
                "replicates must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Sampler for this spec. Covariance sources try the circulant embedding
    /// first and fall back to synthesis from the summed density; the error
    /// reports both failures when neither route is nonnegative.
    pub fn sampler(&self) -> Result<LatticeSampler> {
        self.validate()?;
        match &self.source {
            SimulationSource::Density(s) => LatticeSampler::from_density(s, self.grid, self.seed),
            SimulationSource::Covariance(cov) => {
                match LatticeSampler::on_ring(cov, self.grid, self.seed) {
                    Ok(s) => Ok(s),
                    Err(RigidityError::EmbeddingFailure(embed_msg)) => {
                        let density = crate::spectral::density_from_covariance(
                            cov,
                            crate::spectral::fourier::GridSpec::for_radius(cov.support_radius()),
                        )
                        .map_err(|e| {
                            RigidityError::EmbeddingFailure(format!(
                                "circulant embedding failed ({embed_msg}); \
                                 spectral synthesis failed ({e})"
                            ))
                        })?;
                        LatticeSampler::from_density(&density, self.grid, self.seed).map_err(|e| {
                            RigidityError::EmbeddingFailure(format!(
                                "circulant embedding failed ({embed_msg}); \
                                 spectral synthesis failed ({e})"
                            ))
                        })
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }
}

/// All realizations of the spec, in replicate order. Pairs are simulated in
/// parallel; the aggregation order is fixed.
pub fn sample_gaussian(spec: &SimulationSpec) -> Result<Vec<Vec<f64>>> {
    let sampler = spec.sampler()?;
    let pairs = (spec.replicates + 1) / 2;
    let mut fields: Vec<Vec<f64>> = (0..pairs as u64)
        .into_par_iter()
        .map(|p| {
            let (re, im) = sampler.replicate_pair(p);
            [re, im]
        })
        .flatten_iter()
        .collect();
    fields.truncate(spec.replicates);
    Ok(fields)
}

/// Outcome of replaying a certified predictor on simulated paths.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PredictionCheck {
    pub empirical_mse: f64,
    pub theoretical_residual: f64,
    /// Variance z-score; approximately standard normal under calibration.
    pub z_score: f64,
    pub predictor: PredictorReport,
    pub calibration: PredictionCalibration,
}

/// Solve the predictor for `(source, m, target, n_outer)` and compare its
/// certified residual with the empirical mean squared error over simulated
/// replicates.
pub fn empirical_prediction_check(
    spec: &SimulationSpec,
    m: i64,
    target: &PredictionTarget,
    n_outer: i64,
    replicates: usize,
) -> Result<PredictionCheck> {
    let sampler = spec.sampler()?;
    let cov = match &spec.source {
        SimulationSource::Covariance(c) => c.clone(),
        SimulationSource::Density(s) => {
            crate::spectral::covariance_from_density(s, (2 * n_outer).min(512))?
        }
    };
    let report = crate::predictor::best_linear_predictor(&cov, m, n_outer, target)?;
    let calibration = prediction_calibration(&sampler, target, &report, replicates)?;
    Ok(PredictionCheck {
        empirical_mse: calibration.sample_variance,
        theoretical_residual: report.residual_variance,
        z_score: calibration.variance_z,
        predictor: report,
        calibration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::best_linear_predictor;
    use crate::spectral::builtins;
    use std::collections::BTreeMap;

    #[test]
    fn replicates_are_deterministic_and_distinct() {
        let cov = CovarianceSequence::ar1(0.5).unwrap();
        let s1 = LatticeSampler::new(&cov, 8, 42).unwrap();
        let s2 = LatticeSampler::new(&cov, 8, 42).unwrap();
        assert_eq!(s1.replicate(5), s2.replicate(5));
        let r0 = s1.replicate(0);
        let r1 = s1.replicate(1);
        let r2 = s1.replicate(2);
        assert_ne!(r0, r1);
        assert_ne!(r0, r2);
        let other = LatticeSampler::new(&cov, 8, 43).unwrap();
        assert_ne!(s1.replicate(0), other.replicate(0));
    }

    #[test]
    fn moving_average_embedding_reproduces_the_covariance() {
        let mut filter = BTreeMap::new();
        filter.insert(vec![0i64], 1.0);
        filter.insert(vec![1i64], 0.6);
        let cov = CovarianceSequence::from_filter(1, &filter).unwrap();
        let sampler = LatticeSampler::new(&cov, 8, 7).unwrap();
        assert_eq!(sampler.eigen_clamp(), 0.0);
        let checks = empirical_covariance_check(&sampler, &cov, 4_000, 4).unwrap();
        assert!(checks.len() >= 5);
        for c in &checks {
            assert!(
                c.within_band(),
                "lag {:?}: empirical {} vs {} (band {})",
                c.lag,
                c.empirical,
                c.expected,
                c.band
            );
        }
    }

    #[test]
    fn autoregressive_prediction_calibrates() {
        let cov = CovarianceSequence::ar1(0.5).unwrap();
        let report = best_linear_predictor(&cov, 0, 8, &PredictionTarget::Mass).unwrap();
        let sampler = LatticeSampler::new(&cov, 8, 11).unwrap();
        let cal = prediction_calibration(&sampler, &PredictionTarget::Mass, &report, 4_000)
            .unwrap();
        assert!(cal.mean_z.abs() <= 5.0, "mean z {}", cal.mean_z);
        assert!(cal.variance_z.abs() <= 5.0, "variance z {}", cal.variance_z);
        let rel = (cal.sample_variance - cal.certified_variance).abs()
            / cal.certified_variance;
        assert!(rel < 0.15, "sample variance off by {rel}");
    }

    #[test]
    fn density_grid_sampling_matches_the_unit_root_covariance() {
        // s = (1 - cos u) / (2 pi) has C(0) = 1, C(+-1) = -1/2, zero beyond.
        let s = builtins::ma1_unit_root().unwrap();
        let sampler = LatticeSampler::from_density(&s, 64, 3).unwrap();
        let cov = CovarianceSequence::new(
            1,
            vec![(vec![0], 1.0), (vec![1], -0.5)],
            TailSpec::Finite,
        )
        .unwrap();
        let checks = empirical_covariance_check(&sampler, &cov, 2_000, 3).unwrap();
        for c in &checks {
            assert!(
                c.within_band(),
                "lag {:?}: empirical {} vs {} (band {})",
                c.lag,
                c.empirical,
                c.expected,
                c.band
            );
        }
    }

    #[test]
    fn planar_filter_embedding_reproduces_the_covariance() {
        let mut filter = BTreeMap::new();
        filter.insert(vec![0i64, 0], 1.0);
        filter.insert(vec![1i64, 0], 0.4);
        filter.insert(vec![0i64, 1], 0.4);
        filter.insert(vec![1i64, 1], 0.16);
        let cov = CovarianceSequence::from_filter(2, &filter).unwrap();
        let sampler = LatticeSampler::new(&cov, 3, 19).unwrap();
        assert_eq!(sampler.grid(), &[8, 8]);
        let checks = empirical_covariance_check(&sampler, &cov, 2_000, 2).unwrap();
        for c in &checks {
            assert!(
                c.within_band(),
                "lag {:?}: empirical {} vs {} (band {})",
                c.lag,
                c.empirical,
                c.expected,
                c.band
            );
        }
    }

    #[test]
    fn simulation_specs_replay_bit_identically() {
        let cov = CovarianceSequence::new(1, vec![(vec![0], 1.0)], TailSpec::Finite).unwrap();
        let spec = SimulationSpec {
            source: SimulationSource::Covariance(cov.clone()),
            grid: 16,
            seed: 99,
            replicates: 5,
        };
        let a = sample_gaussian(&spec).unwrap();
        let b = sample_gaussian(&spec).unwrap();
        assert_eq!(a.len(), 5);
        assert_eq!(a[0].len(), 16);
        assert_eq!(a, b);
        // White noise: neighbouring sites are uncorrelated.
        let sampler = spec.sampler().unwrap();
        let checks = empirical_covariance_check(&sampler, &cov, 2_000, 1).unwrap();
        let lag1 = checks.iter().find(|c| c.lag == vec![1]).unwrap();
        assert!(lag1.empirical.abs() <= lag1.band);
    }

    #[test]
    fn white_noise_mse_matches_unit_residual() {
        let cov = CovarianceSequence::new(1, vec![(vec![0], 1.0)], TailSpec::Finite).unwrap();
        let spec = SimulationSpec {
            source: SimulationSource::Covariance(cov),
            grid: 32,
            seed: 4,
            replicates: 2_000,
        };
        let check =
            empirical_prediction_check(&spec, 0, &PredictionTarget::Mass, 4, 2_000).unwrap();
        assert!((check.theoretical_residual - 1.0).abs() < 1e-12);
        assert!(check.z_score.abs() <= 5.0, "z {}", check.z_score);
        assert!((check.empirical_mse - 1.0).abs() < 0.15);
    }

    #[test]
    fn unknown_tails_are_rejected() {
        let cov = CovarianceSequence::new(
            1,
            vec![(vec![0], 1.0), (vec![1], 0.3)],
            TailSpec::Unknown,
        )
        .unwrap();
        let res = LatticeSampler::new(&cov, 4, 0);
        assert!(matches!(res, Err(RigidityError::EmbeddingFailure(_))));
    }
}
