//! Job runners behind the subcommands. Each reads a strict JSON config,
//! writes its artifacts into the output directory, and reports whether the
//! run left undetermined verdicts or mismatches.

use rigidity_core::error::Result;
use rigidity_core::index::{multi_indices_up_to, MultiIndex};
use rigidity_core::io::{
    self, CovarianceConfig, DensityConfig, RealizationManifest,
};
use rigidity_core::poles::{
    rigidity_classifier, ClassificationReport, ClassifierConfig, RigidityVerdict,
};
use rigidity_core::predictor::{
    best_linear_predictor, default_radii, residual_curve, rigidity_from_curve, CurveExtrapolation,
    CurveVerdict, PredictionTarget, PredictorReport, ResidualCurve,
};
use rigidity_core::sampler::{
    empirical_covariance_check, empirical_prediction_check, sample_gaussian, CovarianceCheck,
    PredictionCheck, SimulationSource, SimulationSpec,
};
use rigidity_core::RigidityError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub struct JobArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub k_cap: Option<u32>,
}

/// What the process should report after a completed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobStatus {
    Clean,
    /// Some verdict stayed short of a certificate.
    Undetermined,
    /// An expected outcome or calibration check failed.
    Mismatch,
}

impl JobStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            JobStatus::Clean => 0,
            JobStatus::Undetermined => 2,
            JobStatus::Mismatch => 3,
        }
    }
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| RigidityError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn invalid(msg: impl Into<String>) -> RigidityError {
    RigidityError::InvalidInput(msg.into())
}

/// Target statistic in configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum TargetConfig {
    Mass,
    Moment { k: Vec<u32> },
}

impl TargetConfig {
    fn build(&self) -> PredictionTarget {
        match self {
            TargetConfig::Mass => PredictionTarget::Mass,
            TargetConfig::Moment { k } => PredictionTarget::Moment(MultiIndex::new(k.clone())),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyJob {
    density: DensityConfig,
    #[serde(default)]
    k_cap: Option<u32>,
    /// Run the Gram certificate when the radial route finds no pole.
    #[serde(default)]
    use_gram: bool,
}

#[derive(Serialize)]
struct VerdictsFile {
    label: String,
    k_cap: u32,
    verdicts: Vec<ClassificationReport>,
}

pub fn run_classify(args: JobArgs) -> Result<JobStatus> {
    ensure_out(&args.out)?;
    let job: ClassifyJob = io::read_json(&args.config)?;
    let density = job.density.build()?;
    let k_cap = args.k_cap.or(job.k_cap).unwrap_or(1);
    let mut cfg = ClassifierConfig::default();
    cfg.use_gram = job.use_gram;

    let mut verdicts = Vec::new();
    for k in multi_indices_up_to(density.dim(), k_cap) {
        verdicts.push(rigidity_classifier(&density, &k, &cfg)?);
    }

    let ladders: Vec<(String, &rigidity_core::spectral::ladder::LadderReport)> = verdicts
        .iter()
        .map(|r| (format!("k={}", r.k), &r.radial.ladder))
        .collect();
    io::write_ladder_csv(&args.out.join("ladders.csv"), &ladders)?;
    let undetermined = verdicts.iter().any(|r| {
        matches!(
            r.verdict,
            RigidityVerdict::Undetermined | RigidityVerdict::SufficientOnly
        )
    });
    io::write_json(
        &args.out.join("verdicts.json"),
        &VerdictsFile {
            label: density.label().to_string(),
            k_cap,
            verdicts,
        },
    )?;
    Ok(if undetermined {
        JobStatus::Undetermined
    } else {
        JobStatus::Clean
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictJob {
    covariance: CovarianceConfig,
    m: i64,
    target: TargetConfig,
    /// Annulus radii; defaults to a geometric ladder up to `n_max`.
    #[serde(default)]
    radii: Vec<i64>,
    #[serde(default)]
    n_max: Option<i64>,
}

#[derive(Serialize)]
struct PredictFile {
    m: i64,
    target: TargetConfig,
    curve: ResidualCurve,
    extrapolation: CurveExtrapolation,
    /// Full solution at the largest radius.
    predictor: PredictorReport,
}

pub fn run_predict(args: JobArgs) -> Result<JobStatus> {
    ensure_out(&args.out)?;
    let job: PredictJob = io::read_json(&args.config)?;
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let cov = job.covariance.build(&base)?;
    let target = job.target.build();
    let radii = if job.radii.is_empty() {
        default_radii(job.m, job.n_max.unwrap_or(64))
    } else {
        job.radii.clone()
    };
    let last = *radii
        .last()
        .ok_or_else(|| invalid("predict needs at least one radius"))?;
    let curve = residual_curve(&cov, job.m, &target, &radii)?;
    let extrapolation = rigidity_from_curve(&curve)?;
    let predictor = best_linear_predictor(&cov, job.m, last, &target)?;

    io::write_curve_csv(&args.out.join("curve.csv"), &curve)?;
    let undetermined = extrapolation.verdict == CurveVerdict::Undetermined;
    io::write_json(
        &args.out.join("predictor.json"),
        &PredictFile {
            m: job.m,
            target: job.target,
            curve,
            extrapolation,
            predictor,
        },
    )?;
    Ok(if undetermined {
        JobStatus::Undetermined
    } else {
        JobStatus::Clean
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DppJob {
    kernel: String,
    #[serde(default)]
    k_cap: Option<u32>,
    #[serde(default = "default_true")]
    validate_transform: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Serialize)]
struct DppFile {
    kernel: String,
    transform: Option<rigidity_core::dpp::TransformCheck>,
    order: rigidity_core::dpp::DppRigidityReport,
}

pub fn run_dpp(args: JobArgs) -> Result<JobStatus> {
    ensure_out(&args.out)?;
    let job: DppJob = io::read_json(&args.config)?;
    let kern = rigidity_core::dpp::kernel_by_label(&job.kernel)?;
    let transform = if job.validate_transform {
        Some(rigidity_core::dpp::validate_transform(&kern)?)
    } else {
        None
    };
    let k_cap = args.k_cap.or(job.k_cap).unwrap_or(1);
    let order = rigidity_core::dpp::dpp_rigidity_order(&kern, k_cap, &ClassifierConfig::default())?;

    let ladders: Vec<(String, &rigidity_core::spectral::ladder::LadderReport)> = order
        .reports
        .iter()
        .map(|r| (format!("k={}", r.k), &r.radial.ladder))
        .collect();
    io::write_ladder_csv(&args.out.join("ladders.csv"), &ladders)?;
    let undetermined = order
        .reports
        .iter()
        .any(|r| matches!(r.verdict, RigidityVerdict::Undetermined));
    io::write_json(
        &args.out.join("dpp.json"),
        &DppFile {
            kernel: job.kernel,
            transform,
            order,
        },
    )?;
    Ok(if undetermined {
        JobStatus::Undetermined
    } else {
        JobStatus::Clean
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateJob {
    source: SourceConfig,
    grid: usize,
    replicates: usize,
    seed: u64,
    /// Dump realizations and their manifest.
    #[serde(default)]
    dump: bool,
    /// Check empirical covariances up to this lag against the target.
    #[serde(default)]
    max_lag: Option<i64>,
    #[serde(default)]
    check: Option<PredictionCheckJob>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    density: Option<DensityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    covariance: Option<CovarianceConfig>,
}

impl SourceConfig {
    fn build(&self, base: &Path) -> Result<SimulationSource> {
        match (&self.density, &self.covariance) {
            (Some(d), None) => Ok(SimulationSource::Density(d.build()?)),
            (None, Some(c)) => Ok(SimulationSource::Covariance(c.build(base)?)),
            _ => Err(invalid("source needs exactly one of: density, covariance")),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionCheckJob {
    m: i64,
    target: TargetConfig,
    n_outer: i64,
    replicates: usize,
}

#[derive(Serialize)]
struct SimulationFile {
    grid: usize,
    replicates: usize,
    seed: u64,
    covariance_checks: Option<Vec<CovarianceCheck>>,
    covariance_within_band: Option<bool>,
    prediction: Option<PredictionCheck>,
    prediction_within_band: Option<bool>,
    realizations: Option<RealizationManifest>,
}

pub fn run_simulate(args: JobArgs) -> Result<JobStatus> {
    ensure_out(&args.out)?;
    let raw: serde_json::Value = io::read_json(&args.config)?;
    let job: SimulateJob = serde_json::from_value(raw.clone())
        .map_err(|e| invalid(format!("{} is not valid: {e}", args.config.display())))?;
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let seed = args.seed.unwrap_or(job.seed);
    let spec = SimulationSpec {
        source: job.source.build(&base)?,
        grid: job.grid,
        seed,
        replicates: job.replicates,
    };

    let mut mismatch = false;

    let (cov_checks, cov_ok) = if let (Some(max_lag), SimulationSource::Covariance(cov)) =
        (job.max_lag, &spec.source)
    {
        let sampler = spec.sampler()?;
        let checks = empirical_covariance_check(&sampler, cov, spec.replicates, max_lag)?;
        let ok = checks.iter().all(CovarianceCheck::within_band);
        mismatch |= !ok;
        (Some(checks), Some(ok))
    } else {
        (None, None)
    };

    let (prediction, pred_ok) = if let Some(check) = &job.check {
        let result = empirical_prediction_check(
            &spec,
            check.m,
            &check.target.build(),
            check.n_outer,
            check.replicates,
        )?;
        let ok = result.z_score.abs() <= 5.0 && result.calibration.mean_z.abs() <= 5.0;
        mismatch |= !ok;
        (Some(result), Some(ok))
    } else {
        (None, None)
    };

    let realizations = if job.dump {
        let fields = sample_gaussian(&spec)?;
        let sampler = spec.sampler()?;
        Some(io::write_realizations(
            &args.out,
            "realizations",
            &raw,
            &fields,
            sampler.grid(),
            seed,
        )?)
    } else {
        None
    };

    io::write_json(
        &args.out.join("simulation.json"),
        &SimulationFile {
            grid: job.grid,
            replicates: job.replicates,
            seed,
            covariance_checks: cov_checks,
            covariance_within_band: cov_ok,
            prediction,
            prediction_within_band: pred_ok,
            realizations,
        },
    )?;
    Ok(if mismatch {
        JobStatus::Mismatch
    } else {
        JobStatus::Clean
    })
}

pub fn run_reproduce(out: &Path, filter: Option<&str>) -> Result<JobStatus> {
    ensure_out(out)?;
    let results = crate::scenarios::run_suite(filter);
    let all_pass = results.iter().all(|r| r.passed);

    io::write_json(&out.join("report.json"), &results)?;

    let mut md = String::new();
    md.push_str("# Scenario suite\n\n");
    md.push_str("| scenario | expected | observed | status |\n");
    md.push_str("|---|---|---|---|\n");
    let cell = |s: &str| s.replace('|', "\\|");
    for r in &results {
        md.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            cell(&r.name),
            cell(&r.expected),
            cell(&r.observed),
            if r.passed { "pass" } else { "FAIL" }
        ));
    }
    md.push_str(&format!(
        "\n{} of {} scenarios passed.\n",
        results.iter().filter(|r| r.passed).count(),
        results.len()
    ));
    std::fs::write(out.join("report.md"), md)
        .map_err(|e| RigidityError::Io(format!("cannot write report.md: {e}")))?;

    Ok(if all_pass {
        JobStatus::Clean
    } else {
        JobStatus::Mismatch
    })
}
