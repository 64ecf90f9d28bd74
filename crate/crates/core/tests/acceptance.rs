//! Acceptance gate: ten end-to-end criteria with pinned tolerances and
//! runtime budgets. Each test prints one pass/fail line (visible under
//! `cargo test -- --nocapture`) before asserting.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use rigidity_core::dpp::{dpp_rigidity_order, kernel_by_label};
use rigidity_core::index::MultiIndex;
use rigidity_core::poles::{
    gram_pole_test, radial_pole_test, rigidity_classifier, ClassifierConfig, GramConfig,
    PoleVerdict, RadialConfig, RigidityVerdict,
};
use rigidity_core::predictor::discrete::{
    k_rigid_discrete_test, lmr_test_1d, DiscreteConfig, DiscreteVerdict,
};
use rigidity_core::predictor::{
    best_linear_predictor, default_radii, residual_curve, rigidity_from_curve, CurveVerdict,
    PredictionTarget,
};
use rigidity_core::sampler::{empirical_prediction_check, SimulationSource, SimulationSpec};
use rigidity_core::spectral::builtins;
use rigidity_core::spectral::ladder::LadderVerdict;
use rigidity_core::{CovarianceSequence, TailSpec};

use common::{criterion_line, schur_conditional_variance, trapezoid, FilterModel};

const PI: f64 = std::f64::consts::PI;

fn budget(start: Instant, seconds: u64, n: u32) {
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed <= seconds as f64,
        "criterion {n} exceeded its {seconds}s budget: {elapsed:.1}s"
    );
}

/// Random finite filter with a spectral floor, so both solvers stay far
/// from singularity and the 1e-8 agreement bound is meaningful.
fn draw_filter(rng: &mut ChaCha12Rng, d: usize) -> BTreeMap<Vec<i64>, f64> {
    loop {
        let radius: i64 = if d == 1 {
            rng.gen_range(1..=4)
        } else {
            rng.gen_range(1..=2)
        };
        let offsets: Vec<Vec<i64>> = if d == 1 {
            (0..=radius).map(|i| vec![i]).collect()
        } else {
            (0..=radius)
                .flat_map(|i| (0..=radius).map(move |j| vec![i, j]))
                .collect()
        };
        let mut taps: BTreeMap<Vec<i64>, f64> = offsets
            .into_iter()
            .map(|o| (o, rng.gen_range(-1.0..1.0)))
            .collect();
        let norm: f64 = taps.values().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-3 {
            continue;
        }
        for v in taps.values_mut() {
            *v /= norm;
        }
        let model = FilterModel {
            d,
            taps: taps.clone(),
        };
        let (lo, hi) = model.spectral_range(64);
        if lo >= 1e-3 * hi {
            return taps;
        }
    }
}

#[test]
fn criterion_1_predictor_matches_schur_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let mut max_diff = 0.0f64;
    for case in 0..50 {
        let d = 1 + (case % 2);
        let taps = draw_filter(&mut rng, d);
        let m: i64 = rng.gen_range(0..=2);
        let n_outer: i64 = if d == 1 {
            rng.gen_range((m + 1)..=64)
        } else {
            rng.gen_range((m + 1)..=8)
        };
        let k: Vec<u32> = if m == 0 || rng.gen_bool(0.5) {
            vec![0; d]
        } else if d == 1 {
            vec![rng.gen_range(1..=2)]
        } else {
            let choices = [[1, 0], [0, 1], [1, 1], [2, 0], [0, 2]];
            choices[rng.gen_range(0..choices.len())].to_vec()
        };
        let target = if k.iter().all(|&x| x == 0) {
            PredictionTarget::Mass
        } else {
            PredictionTarget::Moment(MultiIndex::new(k.clone()))
        };

        let cov = CovarianceSequence::from_filter(d, &taps).unwrap();
        let report = best_linear_predictor(&cov, m, n_outer, &target).unwrap();
        let model = FilterModel { d, taps };
        let oracle = schur_conditional_variance(&model, m, n_outer, &k);
        let diff = (report.residual_variance - oracle).abs();
        assert!(
            diff <= 1e-8,
            "case {case}: d={d} m={m} N={n_outer} k={k:?}: {} vs oracle {oracle} (diff {diff:.3e})",
            report.residual_variance
        );
        max_diff = max_diff.max(diff);
    }
    budget(start, 60, 1);
    criterion_line(
        1,
        true,
        &format!("50 random prediction problems, max |residual - Schur oracle| = {max_diff:.3e}"),
    );
}

#[test]
fn criterion_2_ar1_matches_interpolation_quadrature() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for phi in [0.3, 0.5, 0.8] {
        let cov = CovarianceSequence::ar1(phi).unwrap();
        let report = best_linear_predictor(&cov, 0, 512, &PredictionTarget::Mass).unwrap();
        // Interpolation limit as the harmonic mean of the density, in the
        // convention where a unit-variance white noise has s = 1/(2 pi):
        // limit = (2 pi)^2 / int 1/s.
        let s = |u: f64| (1.0 - phi * phi) / ((2.0 * PI) * (1.0 - 2.0 * phi * u.cos() + phi * phi));
        let integral = trapezoid(|u| 1.0 / s(u), -PI, PI, 1 << 14);
        let oracle = (2.0 * PI).powi(2) / integral;
        let rel = (report.residual_variance - oracle).abs() / oracle;
        assert!(
            rel <= 1e-4,
            "phi={phi}: residual {} vs quadrature {oracle} (rel {rel:.3e})",
            report.residual_variance
        );
        worst = worst.max(rel);
    }
    budget(start, 30, 2);
    criterion_line(
        2,
        true,
        &format!("AR(1) residual(512) matches the quadrature interpolation value, worst rel err {worst:.3e}"),
    );
}

#[test]
fn criterion_3_unit_root_curve_vanishes() {
    let start = Instant::now();
    let taps: BTreeMap<Vec<i64>, f64> = [(vec![0], 1.0), (vec![1], -1.0)].into_iter().collect();
    let cov = CovarianceSequence::from_filter(1, &taps).unwrap();
    let radii = default_radii(0, 512);
    let curve = residual_curve(&cov, 0, &PredictionTarget::Mass, &radii).unwrap();
    let slack = 1e-12 * cov.c0();
    let decreasing = curve
        .residuals
        .windows(2)
        .all(|w| w[1] <= w[0] + slack);
    let extrap = rigidity_from_curve(&curve).unwrap();
    let ok = decreasing && extrap.limit.abs() <= 1e-4 && extrap.verdict == CurveVerdict::Rigid;
    criterion_line(
        3,
        ok,
        &format!(
            "unit-root curve decreasing={decreasing}, limit {:.2e}, verdict {:?}",
            extrap.limit, extrap.verdict
        ),
    );
    budget(start, 30, 3);
}

#[test]
fn criterion_4_quartic_density_first_moment_rigid() {
    let start = Instant::now();
    let s = builtins::quartic_pm1().unwrap();
    let cfg = DiscreteConfig::default();
    let first = k_rigid_discrete_test(&s, 1, 1, &cfg).unwrap();
    let mass = k_rigid_discrete_test(&s, 1, 0, &cfg).unwrap();

    let witness_ok = mass.witness.as_ref().is_some_and(|w| {
        let even = w.freqs == vec![-1, 0, 1]
            && (w.coefficients[0] - w.coefficients[2]).abs() <= 1e-9;
        let degree_one = w.coefficients[0].abs() > 1e-6;
        even && degree_one && w.moment(0).abs() > 1e-6
    });
    let ok = first.verdict == DiscreteVerdict::Rigid
        && mass.verdict == DiscreteVerdict::NotRigid
        && witness_ok;
    criterion_line(
        4,
        ok,
        &format!(
            "quartic density: k=1 {:?}, k=0 {:?}, even degree-1 witness={witness_ok}",
            first.verdict, mass.verdict
        ),
    );
    budget(start, 10, 4);
}

#[test]
fn criterion_5_circle_zero_counting_rule() {
    let start = Instant::now();
    // (zero, factor order) lists with circle totals covering 0..=4; mirror
    // locations double non-self-paired entries.
    let cases: Vec<(Vec<(f64, u32)>, u32)> = vec![
        (vec![], 0),
        (vec![(0.0, 1)], 1),
        (vec![(-PI, 1)], 1),
        (vec![(1.1, 1)], 2),
        (vec![(0.0, 2)], 2),
        (vec![(0.0, 1), (-PI, 1)], 2),
        (vec![(1.9, 1), (0.0, 1)], 3),
        (vec![(0.0, 3)], 3),
        (vec![(-PI, 1), (0.7, 1)], 3),
        (vec![(0.8, 2)], 4),
        (vec![(0.5, 1), (2.4, 1)], 4),
        (vec![(0.0, 2), (-PI, 2)], 4),
    ];
    let cfg = DiscreteConfig::default();
    let mut checked = 0;
    for (zeros, total) in &cases {
        let s = builtins::torus_with_zeros(zeros, "flat").unwrap();
        for m in 0..=2i64 {
            let rep = lmr_test_1d(&s, m, &cfg).unwrap();
            let expected = if *total > 2 * m as u32 {
                DiscreteVerdict::Rigid
            } else {
                DiscreteVerdict::NotRigid
            };
            assert_eq!(
                rep.total_multiplicity,
                Some(*total),
                "zeros {zeros:?}: measured multiplicity mismatch"
            );
            assert_eq!(
                rep.verdict, expected,
                "zeros {zeros:?} (total {total}), m={m}"
            );
            if rep.witness.is_some() {
                assert_eq!(
                    rep.witness_energy,
                    Some(LadderVerdict::Convergent),
                    "zeros {zeros:?}, m={m}: witness failed its energy ladder"
                );
            }
            checked += 1;
        }
    }
    budget(start, 30, 5);
    criterion_line(
        5,
        true,
        &format!("{checked} reconstruction verdicts match the multiplicity rule, all witnesses certified"),
    );
}

#[test]
fn criterion_6_radial_power_grid() {
    let start = Instant::now();
    let cfg = RadialConfig::default();
    let mut matched = 0;
    let mut undetermined = 0;
    let mut cells = 0;
    for d in 1..=3usize {
        for alpha in 0..=6u32 {
            let s = builtins::radial_power(d, alpha as f64, 1.0).unwrap();
            for t in 0..=2u32 {
                let mut k = vec![0u32; d];
                k[0] = t;
                let k = MultiIndex::new(k);
                let rep = radial_pole_test(&s, &vec![0.0; d], &k, &cfg).unwrap();
                let expected = if alpha >= 2 * t + d as u32 {
                    PoleVerdict::Pole
                } else {
                    PoleVerdict::NoPole
                };
                cells += 1;
                if rep.verdict == expected {
                    matched += 1;
                } else {
                    assert_eq!(
                        rep.verdict,
                        PoleVerdict::Undetermined,
                        "alpha={alpha} d={d} |k|={t}: wrong determined verdict"
                    );
                    undetermined += 1;
                }
            }
        }
    }
    let ok = matched * 100 >= cells * 95;
    criterion_line(
        6,
        ok,
        &format!("power-counting rule matched {matched}/{cells} cells, {undetermined} undetermined"),
    );
    budget(start, 60, 6);
}

#[test]
fn criterion_7_line_valley_gram_certificates() {
    let start = Instant::now();
    let s = builtins::line_zero_square().unwrap();
    let rep = gram_pole_test(&s, &[0.0, 0.0], &GramConfig::default()).unwrap();
    let mass = rep
        .entry(&MultiIndex::new(vec![0, 0]))
        .map(|e| e.verdict)
        .unwrap_or(PoleVerdict::Undetermined);
    let (first, witness) = rep
        .entry(&MultiIndex::new(vec![1, 0]))
        .map(|e| (e.verdict, e.witness.clone()))
        .unwrap_or((PoleVerdict::Undetermined, None));
    // Witness within 1e-6 of the normalized valley direction (u1 - u2).
    let aligned = witness.as_ref().is_some_and(|w| {
        let a = w.coefficient(&MultiIndex::new(vec![1, 0]));
        let b = w.coefficient(&MultiIndex::new(vec![0, 1]));
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        ((a - inv).abs() <= 1e-6 && (b + inv).abs() <= 1e-6)
            || ((a + inv).abs() <= 1e-6 && (b - inv).abs() <= 1e-6)
    });
    let ok = mass == PoleVerdict::Pole && first == PoleVerdict::NoPole && aligned;
    criterion_line(
        7,
        ok,
        &format!("mass {mass:?}, first moment {first:?}, witness aligned with the valley: {aligned}"),
    );
    budget(start, 60, 7);
}

#[test]
fn criterion_8_dpp_rigidity_orders() {
    let start = Instant::now();
    let cfg = ClassifierConfig::default();

    let ginibre = dpp_rigidity_order(&kernel_by_label("ginibre").unwrap(), 1, &cfg).unwrap();
    let ginibre_levels = ginibre.reports.iter().all(|r| {
        let expect = if r.k.total() == 0 {
            RigidityVerdict::KRigid
        } else {
            RigidityVerdict::NotKRigid
        };
        r.verdict == expect
    });
    let sine = dpp_rigidity_order(&kernel_by_label("sine").unwrap(), 0, &cfg).unwrap();
    let sinc = dpp_rigidity_order(&kernel_by_label("tensor_sinc").unwrap(), 0, &cfg).unwrap();

    let ok = ginibre.order == Some(0)
        && ginibre.frontier_certified
        && ginibre_levels
        && sine.order == Some(0)
        && sinc.order.is_none()
        && sinc
            .reports
            .iter()
            .all(|r| r.verdict == RigidityVerdict::NotKRigid);
    criterion_line(
        8,
        ok,
        &format!(
            "ginibre order {:?} (levels ok: {ginibre_levels}), sine order {:?}, tensor sinc order {:?}",
            ginibre.order, sine.order, sinc.order
        ),
    );
    budget(start, 120, 8);
}

#[test]
fn criterion_9_simulation_calibration() {
    let start = Instant::now();
    let ma1: BTreeMap<Vec<i64>, f64> = [(vec![0], 1.0), (vec![1], -1.0)].into_iter().collect();
    let ma2: BTreeMap<Vec<i64>, f64> = [(vec![0], 1.0), (vec![1], 0.6), (vec![2], -0.2)]
        .into_iter()
        .collect();
    let planar: BTreeMap<Vec<i64>, f64> = [
        (vec![0, 0], 1.0),
        (vec![1, 0], 0.5),
        (vec![0, 1], -0.3),
    ]
    .into_iter()
    .collect();
    let wn1 = CovarianceSequence::new(1, vec![(vec![0], 1.0)], TailSpec::Finite).unwrap();
    let wn2 = CovarianceSequence::new(2, vec![(vec![0, 0], 1.0)], TailSpec::Finite).unwrap();

    let cov_src = |cov: &CovarianceSequence| SimulationSource::Covariance(cov.clone());
    let mass = || PredictionTarget::Mass;
    let mom = |k: Vec<u32>| PredictionTarget::Moment(MultiIndex::new(k));

    // (name, source, grid, seed, m, target, n_outer, replicates)
    let scenarios: Vec<(
        &str,
        SimulationSource,
        usize,
        u64,
        i64,
        PredictionTarget,
        i64,
        usize,
    )> = vec![
        ("wn1 mass", cov_src(&wn1), 32, 101, 0, mass(), 8, 4000),
        ("wn1 moment2", cov_src(&wn1), 32, 102, 1, mom(vec![2]), 8, 4000),
        ("ma1 mass m0", cov_src(&CovarianceSequence::from_filter(1, &ma1).unwrap()), 64, 103, 0, mass(), 16, 4000),
        ("ma1 mass m1", cov_src(&CovarianceSequence::from_filter(1, &ma1).unwrap()), 64, 104, 1, mass(), 16, 4000),
        ("ar1(0.3) mass", cov_src(&CovarianceSequence::ar1(0.3).unwrap()), 128, 105, 0, mass(), 12, 4000),
        ("ar1(0.5) mass", cov_src(&CovarianceSequence::ar1(0.5).unwrap()), 128, 106, 0, mass(), 12, 4000),
        ("ar1(0.8) mass", cov_src(&CovarianceSequence::ar1(0.8).unwrap()), 512, 107, 0, mass(), 16, 3000),
        ("ar1(0.5) moment1", cov_src(&CovarianceSequence::ar1(0.5).unwrap()), 128, 108, 1, mom(vec![1]), 12, 4000),
        ("ar1(0.5) mass m2", cov_src(&CovarianceSequence::ar1(0.5).unwrap()), 128, 109, 2, mass(), 12, 4000),
        ("ma2 mass", cov_src(&CovarianceSequence::from_filter(1, &ma2).unwrap()), 64, 110, 0, mass(), 10, 4000),
        ("ma2 moment2", cov_src(&CovarianceSequence::from_filter(1, &ma2).unwrap()), 64, 111, 1, mom(vec![2]), 10, 4000),
        ("wn2 mass", cov_src(&wn2), 16, 112, 0, mass(), 4, 3000),
        ("planar mass", cov_src(&CovarianceSequence::from_filter(2, &planar).unwrap()), 16, 113, 0, mass(), 5, 3000),
        ("planar moment10", cov_src(&CovarianceSequence::from_filter(2, &planar).unwrap()), 16, 114, 1, mom(vec![1, 0]), 5, 2000),
        ("planar moment01", cov_src(&CovarianceSequence::from_filter(2, &planar).unwrap()), 16, 115, 1, mom(vec![0, 1]), 5, 2000),
        ("unit-root density", SimulationSource::Density(builtins::ma1_unit_root().unwrap()), 64, 116, 0, mass(), 16, 4000),
        ("ar1 density", SimulationSource::Density(builtins::ar1(0.5).unwrap()), 64, 117, 0, mass(), 12, 4000),
        ("flat density", SimulationSource::Density(builtins::white_noise(1).unwrap()), 32, 118, 0, mass(), 8, 4000),
        ("flat density 2d", SimulationSource::Density(builtins::white_noise(2).unwrap()), 16, 119, 0, mass(), 4, 3000),
        ("ma1 moment1 m2", cov_src(&CovarianceSequence::from_filter(1, &ma1).unwrap()), 128, 120, 2, mom(vec![1]), 16, 3000),
    ];

    let mut zs = Vec::new();
    for (name, source, grid, seed, m, target, n_outer, replicates) in scenarios {
        let spec = SimulationSpec {
            source,
            grid,
            seed,
            replicates,
        };
        let check = empirical_prediction_check(&spec, m, &target, n_outer, replicates).unwrap();
        zs.push((name, check.z_score));
    }
    let n = zs.len();
    let over3 = zs.iter().filter(|(_, z)| z.abs() > 3.0).count();
    let over5 = zs.iter().filter(|(_, z)| z.abs() > 5.0).count();
    let ok = over5 == 0 && (n - over3) * 100 >= n * 95;
    let detail = zs
        .iter()
        .map(|(name, z)| format!("{name}: z={z:+.2}"))
        .collect::<Vec<_>>()
        .join(", ");
    criterion_line(
        9,
        ok,
        &format!("{n} scenarios, {over5} with |z|>5, {over3} with |z|>3 ({detail})"),
    );
    budget(start, 180, 9);
}

#[test]
fn criterion_10_off_origin_valley_stays_open() {
    let start = Instant::now();
    let s = builtins::off_origin_valley().unwrap();
    let rep = rigidity_classifier(&s, &MultiIndex::zero(2), &ClassifierConfig::default()).unwrap();
    let ok = rep.verdict == RigidityVerdict::SufficientOnly;
    criterion_line(
        10,
        ok,
        &format!("valley away from the origin: k=0 verdict {:?}", rep.verdict),
    );
    budget(start, 30, 10);
}
