//! Bundled scenario suite: the worked examples with their expected
//! outcomes, replayed end to end. Scenarios run concurrently; results come
//! back in listing order.

use rayon::prelude::*;
use rigidity_core::dpp;
use rigidity_core::error::Result;
use rigidity_core::index::{multi_indices_up_to, MultiIndex};
use rigidity_core::poles::{
    gram_pole_test, rigidity_classifier, ClassifierConfig, GramConfig, PoleVerdict,
    RigidityVerdict,
};
use rigidity_core::predictor::discrete::{
    k_rigid_discrete_test, lmr_test_1d, DiscreteConfig, DiscreteVerdict,
};
use rigidity_core::predictor::{
    best_linear_predictor, default_radii, residual_curve, rigidity_from_curve, CurveVerdict,
    PredictionTarget,
};
use rigidity_core::sampler::{
    empirical_covariance_check, empirical_prediction_check, SimulationSource, SimulationSpec,
};
use rigidity_core::spectral::builtins;
use rigidity_core::{CovarianceSequence, TailSpec};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioResult {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub passed: bool,
}

type Run = fn() -> Result<(bool, String)>;

struct Scenario {
    name: &'static str,
    expected: &'static str,
    run: Run,
}

fn unit_root_filter() -> Result<CovarianceSequence> {
    let mut taps = BTreeMap::new();
    taps.insert(vec![0i64], 1.0);
    taps.insert(vec![1i64], -1.0);
    CovarianceSequence::from_filter(1, &taps)
}

fn verdict_tag(v: RigidityVerdict) -> &'static str {
    match v {
        RigidityVerdict::KRigid => "KRigid",
        RigidityVerdict::NotKRigid => "NotKRigid",
        RigidityVerdict::SufficientOnly => "SufficientOnly",
        RigidityVerdict::Undetermined => "Undetermined",
    }
}

fn classify_all(
    s: &rigidity_core::SpectralDensity,
    k_cap: u32,
) -> Result<Vec<(MultiIndex, RigidityVerdict)>> {
    let cfg = ClassifierConfig::default();
    multi_indices_up_to(s.dim(), k_cap)
        .into_iter()
        .map(|k| rigidity_classifier(s, &k, &cfg).map(|r| (k, r.verdict)))
        .collect()
}

fn scaling_density_first_moments() -> Result<(bool, String)> {
    let s = builtins::gaf_scaling(1.0)?;
    let rows = classify_all(&s, 2)?;
    let mut ok = true;
    let mut obs = Vec::new();
    for (k, v) in &rows {
        let want = if k.total() <= 1 {
            RigidityVerdict::KRigid
        } else {
            RigidityVerdict::NotKRigid
        };
        ok &= *v == want;
        obs.push(format!("{}:{}", k, verdict_tag(*v)));
    }
    Ok((ok, obs.join(" ")))
}

fn poisson_never_rigid() -> Result<(bool, String)> {
    let s = builtins::white_noise(2)?;
    let rows = classify_all(&s, 1)?;
    let ok = rows.iter().all(|(_, v)| *v == RigidityVerdict::NotKRigid);
    let obs = rows
        .iter()
        .map(|(k, v)| format!("{}:{}", k, verdict_tag(*v)))
        .collect::<Vec<_>>()
        .join(" ");
    Ok((ok, obs))
}

fn ginibre_mass_rigid_only() -> Result<(bool, String)> {
    let rep = dpp::dpp_rigidity_order(&dpp::ginibre(), 1, &ClassifierConfig::default())?;
    let ok = rep.order == Some(0) && rep.frontier_certified;
    Ok((
        ok,
        format!(
            "order={:?} frontier_certified={}",
            rep.order, rep.frontier_certified
        ),
    ))
}

fn sine_kernel_mass_rigid() -> Result<(bool, String)> {
    let rep = dpp::dpp_rigidity_order(&dpp::sine(), 1, &ClassifierConfig::default())?;
    let ok = rep.order == Some(0) && rep.frontier_certified;
    Ok((
        ok,
        format!(
            "order={:?} frontier_certified={}",
            rep.order, rep.frontier_certified
        ),
    ))
}

fn tensor_sinc_not_mass_rigid() -> Result<(bool, String)> {
    let rep = dpp::dpp_rigidity_order(&dpp::tensor_sinc(), 0, &ClassifierConfig::default())?;
    let ok = rep.order.is_none() && rep.frontier_certified;
    Ok((
        ok,
        format!(
            "order={:?} frontier_certified={}",
            rep.order, rep.frontier_certified
        ),
    ))
}

fn quartic_first_moment_rigid() -> Result<(bool, String)> {
    let s = builtins::quartic_pm1()?;
    let cfg = DiscreteConfig::default();
    let r1 = k_rigid_discrete_test(&s, 1, 1, &cfg)?;
    let r0 = k_rigid_discrete_test(&s, 1, 0, &cfg)?;
    // The non-rigidity witness for the average must be an even trig
    // polynomial of degree one.
    let witness_even = r0.witness.as_ref().is_some_and(|w| {
        w.freqs == vec![-1, 0, 1] && (w.coefficients[0] - w.coefficients[2]).abs() < 1e-9
    });
    let ok = r1.verdict == DiscreteVerdict::Rigid
        && r0.verdict == DiscreteVerdict::NotRigid
        && witness_even;
    Ok((
        ok,
        format!(
            "k=1:{:?} k=0:{:?} even_witness={witness_even}",
            r1.verdict, r0.verdict
        ),
    ))
}

fn unit_root_average_rigid() -> Result<(bool, String)> {
    let s = builtins::ma1_unit_root()?;
    let cfg = DiscreteConfig::default();
    let small = lmr_test_1d(&s, 0, &cfg)?;
    let large = lmr_test_1d(&s, 1, &cfg)?;
    let ok = small.verdict == DiscreteVerdict::Rigid && large.verdict == DiscreteVerdict::NotRigid;
    Ok((ok, format!("m=0:{:?} m=1:{:?}", small.verdict, large.verdict)))
}

fn ar1_interpolation_limit() -> Result<(bool, String)> {
    let phi = 0.5f64;
    let cov = CovarianceSequence::ar1(phi)?;
    let radii = default_radii(0, 256);
    let curve = residual_curve(&cov, 0, &PredictionTarget::Mass, &radii)?;
    let fit = rigidity_from_curve(&curve)?;
    let limit = (1.0 - phi * phi) / (1.0 + phi * phi);
    let solved = best_linear_predictor(&cov, 0, 512, &PredictionTarget::Mass)?;
    let rel = (solved.residual_variance - limit).abs() / limit;
    let ok = fit.verdict == CurveVerdict::NotRigid && rel < 1e-4;
    Ok((
        ok,
        format!(
            "curve={:?} residual(512)={:.6} limit={:.6} rel={rel:.2e}",
            fit.verdict, solved.residual_variance, limit
        ),
    ))
}

fn unit_root_curve_extrapolates_to_zero() -> Result<(bool, String)> {
    let cov = unit_root_filter()?;
    let radii = default_radii(0, 256);
    let curve = residual_curve(&cov, 0, &PredictionTarget::Mass, &radii)?;
    let fit = rigidity_from_curve(&curve)?;
    let nonincreasing = curve
        .residuals
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12);
    let ok =
        fit.verdict == CurveVerdict::Rigid && fit.limit.abs() <= 1e-4 && nonincreasing;
    Ok((
        ok,
        format!(
            "curve={:?} limit={:.3e} nonincreasing={nonincreasing}",
            fit.verdict, fit.limit
        ),
    ))
}

fn line_zero_pole_at_origin() -> Result<(bool, String)> {
    let s = builtins::line_zero_square()?;
    let rep = gram_pole_test(&s, &[0.0, 0.0], &GramConfig::default())?;
    let mass = rep
        .entry(&MultiIndex::new(vec![0, 0]))
        .map(|e| e.verdict)
        .unwrap_or(PoleVerdict::Undetermined);
    let first = rep
        .entry(&MultiIndex::new(vec![1, 0]))
        .map(|e| (e.verdict, e.witness.clone()))
        .unwrap_or((PoleVerdict::Undetermined, None));
    // The finite-energy witness must align with the valley direction
    // (u1 - u2) / sqrt(2).
    let aligned = first.1.as_ref().is_some_and(|w| {
        let a = w.coefficient(&MultiIndex::new(vec![1, 0]));
        let b = w.coefficient(&MultiIndex::new(vec![0, 1]));
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        ((a - inv).abs() < 1e-6 && (b + inv).abs() < 1e-6)
            || ((a + inv).abs() < 1e-6 && (b - inv).abs() < 1e-6)
    });
    let ok = mass == PoleVerdict::Pole && first.0 == PoleVerdict::NoPole && aligned;
    Ok((
        ok,
        format!(
            "mass={mass:?} first={:?} witness_aligned={aligned}",
            first.0
        ),
    ))
}

fn off_origin_valley_stays_sufficient() -> Result<(bool, String)> {
    let s = builtins::off_origin_valley()?;
    let rep = rigidity_classifier(&s, &MultiIndex::zero(2), &ClassifierConfig::default())?;
    let ok = rep.verdict == RigidityVerdict::SufficientOnly;
    Ok((ok, format!("k=0:{}", verdict_tag(rep.verdict))))
}

fn white_noise_unit_mse() -> Result<(bool, String)> {
    let cov = CovarianceSequence::new(1, vec![(vec![0], 1.0)], TailSpec::Finite)?;
    let spec = SimulationSpec {
        source: SimulationSource::Covariance(cov),
        grid: 32,
        seed: 2024,
        replicates: 10_000,
    };
    let check = empirical_prediction_check(&spec, 0, &PredictionTarget::Mass, 4, 10_000)?;
    let ok = (check.theoretical_residual - 1.0).abs() < 1e-12 && check.z_score.abs() <= 5.0;
    Ok((
        ok,
        format!(
            "mse={:.4} residual={:.4} z={:.2}",
            check.empirical_mse, check.theoretical_residual, check.z_score
        ),
    ))
}

fn unit_root_covariance_ratio() -> Result<(bool, String)> {
    let cov = unit_root_filter()?;
    let spec = SimulationSpec {
        source: SimulationSource::Covariance(cov.clone()),
        grid: 64,
        seed: 515,
        replicates: 10_000,
    };
    let sampler = spec.sampler()?;
    let checks = empirical_covariance_check(&sampler, &cov, spec.replicates, 2)?;
    let all_in = checks.iter().all(|c| c.within_band());
    let lag1 = checks
        .iter()
        .find(|c| c.lag == vec![1])
        .map(|c| c.empirical / cov.c0())
        .unwrap_or(f64::NAN);
    let ok = all_in && (lag1 + 0.5).abs() < 0.05;
    Ok((ok, format!("C(1)/C(0)={lag1:.4} all_within_band={all_in}")))
}

fn ar1_covariance_ratio() -> Result<(bool, String)> {
    let cov = CovarianceSequence::ar1(0.5)?;
    let spec = SimulationSpec {
        source: SimulationSource::Covariance(cov.clone()),
        grid: 256,
        seed: 333,
        replicates: 10_000,
    };
    let sampler = spec.sampler()?;
    let checks = empirical_covariance_check(&sampler, &cov, spec.replicates, 2)?;
    let all_in = checks.iter().all(|c| c.within_band());
    let lag2 = checks
        .iter()
        .find(|c| c.lag == vec![2])
        .map(|c| c.empirical / cov.c0())
        .unwrap_or(f64::NAN);
    let ok = all_in && (lag2 - 0.25).abs() < 0.05;
    Ok((ok, format!("C(2)/C(0)={lag2:.4} all_within_band={all_in}")))
}

fn suite() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "planar_scaling_density_first_moments_rigid",
            expected: "KRigid for |k| <= 1, NotKRigid for |k| = 2",
            run: scaling_density_first_moments,
        },
        Scenario {
            name: "poisson_constant_density_never_rigid",
            expected: "NotKRigid for every k",
            run: poisson_never_rigid,
        },
        Scenario {
            name: "dpp_ginibre_mass_rigid_only",
            expected: "order 0, frontier certified",
            run: ginibre_mass_rigid_only,
        },
        Scenario {
            name: "dpp_sine_kernel_mass_rigid",
            expected: "order 0, frontier certified",
            run: sine_kernel_mass_rigid,
        },
        Scenario {
            name: "dpp_tensor_sinc_not_mass_rigid",
            expected: "no rigid order, frontier certified",
            run: tensor_sinc_not_mass_rigid,
        },
        Scenario {
            name: "discrete_quartic_first_moment_rigid",
            expected: "k=1 rigid, k=0 not rigid with an even degree-1 witness",
            run: quartic_first_moment_rigid,
        },
        Scenario {
            name: "discrete_unit_root_average_rigid",
            expected: "m=0 rigid, m=1 not rigid",
            run: unit_root_average_rigid,
        },
        Scenario {
            name: "ar1_interpolation_limit",
            expected: "curve NotRigid; residual(512) = (1-phi^2)/(1+phi^2) within 1e-4",
            run: ar1_interpolation_limit,
        },
        Scenario {
            name: "discrete_unit_root_curve_vanishes",
            expected: "nonincreasing curve, Rigid, limit <= 1e-4",
            run: unit_root_curve_extrapolates_to_zero,
        },
        Scenario {
            name: "anisotropic_line_zero_gram",
            expected: "Pole at k=(0,0); NoPole at k=(1,0) with valley-aligned witness",
            run: line_zero_pole_at_origin,
        },
        Scenario {
            name: "off_origin_valley_guard",
            expected: "SufficientOnly at k=0 (no false converse)",
            run: off_origin_valley_stays_sufficient,
        },
        Scenario {
            name: "simulate_white_noise_unit_mse",
            expected: "empirical MSE near 1 with |z| <= 5",
            run: white_noise_unit_mse,
        },
        Scenario {
            name: "simulate_unit_root_covariance",
            expected: "C(1)/C(0) near -1/2, all lags within band",
            run: unit_root_covariance_ratio,
        },
        Scenario {
            name: "simulate_ar1_covariance",
            expected: "C(2)/C(0) near 1/4, all lags within band",
            run: ar1_covariance_ratio,
        },
    ]
}

/// Run the suite. `None` selects everything; `Some(f)` keeps scenarios whose
/// name contains `f`, so the empty string selects nothing.
pub fn run_suite(filter: Option<&str>) -> Vec<ScenarioResult> {
    let selected: Vec<Scenario> = suite()
        .into_iter()
        .filter(|s| match filter {
            None => true,
            Some("") => false,
            Some(f) => s.name.contains(f),
        })
        .collect();
    selected
        .into_par_iter()
        .map(|s| match (s.run)() {
            Ok((passed, observed)) => ScenarioResult {
                name: s.name.to_string(),
                expected: s.expected.to_string(),
                observed,
                passed,
            },
            Err(e) => ScenarioResult {
                name: s.name.to_string(),
                expected: s.expected.to_string(),
                observed: format!("error: {e}"),
                passed: false,
            },
        })
        .collect()
}
