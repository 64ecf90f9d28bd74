//! `rigidity`: classify spectral densities, solve linear predictors, check
//! determinantal kernels, simulate lattice fields, and replay the bundled
//! scenario suite.
//!
//! Exit codes: 0 success, 1 input or runtime error (with a structured JSON
//! error on stderr), 2 when a run completes but leaves undetermined
//! verdicts, 3 when a reproduction or calibration check mismatches.

mod jobs;
mod scenarios;

use clap::{Args, Parser, Subcommand};
use rigidity_core::RigidityError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "rigidity", version, about = "Rigidity analysis of stationary processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Job configuration (strict JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Override the seed of the configured job.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the maximum total moment order.
    #[arg(long)]
    k_cap: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify rigidity of all moment statistics of a density.
    Classify(CommonArgs),
    /// Solve the optimal linear predictor over an annulus ladder.
    Predict(CommonArgs),
    /// Validate a determinantal kernel and classify its rigidity order.
    Dpp(CommonArgs),
    /// Simulate Gaussian lattice fields and calibrate against certificates.
    Simulate(CommonArgs),
    /// Run the bundled scenario suite against its expected verdicts.
    #[command(visible_alias = "reproduce-paper")]
    Reproduce {
        /// Output directory; created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Keep only scenarios whose name contains this substring. An empty
        /// string selects nothing and succeeds vacuously.
        #[arg(long)]
        filter: Option<String>,
    },
}

fn error_kind(e: &RigidityError) -> &'static str {
    match e {
        RigidityError::NonSummableCovariance(_) => "non_summable_covariance",
        RigidityError::NegativeDensity { .. } => "negative_density",
        RigidityError::QuadratureFailure(_) => "quadrature_failure",
        RigidityError::EvaluationFailure { .. } => "evaluation_failure",
        RigidityError::IllConditioned(_) => "ill_conditioned",
        RigidityError::MissingAnnotations(_) => "missing_annotations",
        RigidityError::InconsistentAnnotations(_) => "inconsistent_annotations",
        RigidityError::EmbeddingFailure(_) => "embedding_failure",
        RigidityError::TransformMismatch(_) => "transform_mismatch",
        RigidityError::InvalidInput(_) => "invalid_input",
        RigidityError::Io(_) => "io",
    }
}

fn init_threads() {
    if let Ok(v) = std::env::var("RIGIDITY_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                // Ignore failure: the pool may already exist in tests.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() {
    init_threads();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Classify(args) => jobs::run_classify(args.into()),
        Command::Predict(args) => jobs::run_predict(args.into()),
        Command::Dpp(args) => jobs::run_dpp(args.into()),
        Command::Simulate(args) => jobs::run_simulate(args.into()),
        Command::Reproduce { out, filter } => jobs::run_reproduce(out, filter.as_deref()),
    };
    match outcome {
        Ok(status) => std::process::exit(status.exit_code()),
        Err(e) => {
            let payload = serde_json::json!({
                "error": {
                    "kind": error_kind(&e),
                    "message": e.to_string(),
                }
            });
            eprintln!("{payload}");
            std::process::exit(1);
        }
    }
}

impl From<&CommonArgs> for jobs::JobArgs {
    fn from(a: &CommonArgs) -> jobs::JobArgs {
        jobs::JobArgs {
            config: a.config.clone(),
            out: a.out.clone(),
            seed: a.seed,
            k_cap: a.k_cap,
        }
    }
}
