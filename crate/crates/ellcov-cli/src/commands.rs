//! Command-line definitions and the four command drivers.
//!
//! Every driver returns the process exit code on success (`0`, or `2` for
//! an estimate that hit its iteration cap without converging) and a
//! [`CliError`] carrying code `1` for any input or validation problem.
//! Drivers never panic on malformed input: every parse and validation step
//! surfaces as an error message.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ellcov::anscm::{anscm, AnscmMethod};
use ellcov::detect::{calibrate_threshold, detection_curve, StatePool};
use ellcov::{
    Complex64, EstimateResult, EstimatorConfig, EstimatorKind, HpdMatrix, Mat, SampleBatch,
    Scalar,
};

use crate::formats::{
    emit_matrix_complex, emit_matrix_real, parse_matrix, parse_samples, AnyBatch, AnyMatrix,
};
use crate::scenario::{ScenarioSpec, ThresholdRecord};

/// A failed command: message plus the process exit code (always `1`; the
/// non-convergence code `2` is a success path carrying a result).
#[derive(Debug)]
pub struct CliError {
    /// Process exit code.
    pub code: i32,
    /// Human-readable description, printed to stderr.
    pub message: String,
}

fn input_error(message: String) -> CliError {
    CliError { code: 1, message }
}

/// Regularized covariance estimation and adaptive-detection simulation.
#[derive(Debug, Parser)]
#[command(name = "ellcov", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Top-level subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a covariance or scatter matrix from a sample file.
    Estimate(EstimateArgs),
    /// Evaluate the normalized-covariance expectation of a matrix.
    Anscm(AnscmArgs),
    /// Calibrate a detection threshold for a scenario.
    Calibrate(CalibrateArgs),
    /// Measure a detection-probability curve at a calibrated threshold.
    Simulate(SimulateArgs),
}

/// Estimation method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Regularized scatter fixed point.
    Tyler,
    /// Outlier-rejecting regularized scatter fixed point.
    Ptyler,
    /// Regularized sample covariance blend.
    Scm,
    /// Outlier-rejecting sample covariance blend.
    Pscm,
    /// Penalized Gaussian-likelihood covariance.
    Cg,
    /// Outlier-rejecting penalized Gaussian-likelihood covariance.
    Pcg,
}

impl MethodArg {
    fn kind(self) -> EstimatorKind {
        match self {
            MethodArg::Tyler => EstimatorKind::RegTyler,
            MethodArg::Ptyler => EstimatorKind::RegPtyler,
            MethodArg::Scm => EstimatorKind::RegScm,
            MethodArg::Pscm => EstimatorKind::RegPartialScm,
            MethodArg::Cg => EstimatorKind::RegCgCov,
            MethodArg::Pcg => EstimatorKind::RegPcgCov,
        }
    }

    fn config(self, alpha: f64) -> EstimatorConfig {
        match self {
            MethodArg::Cg | MethodArg::Pcg => EstimatorConfig::cg(alpha),
            _ => EstimatorConfig::new(alpha),
        }
    }
}

/// Flags of the `estimate` subcommand.
#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Sample file (one training vector per row).
    #[arg(long)]
    pub samples: PathBuf,
    /// Prior matrix file (must be Hermitian positive definite).
    #[arg(long)]
    pub prior: PathBuf,
    /// Estimation method.
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Blend weight in [0, 1]: 0 keeps the prior, 1 uses data only.
    #[arg(long)]
    pub alpha: f64,
    /// Fraction of samples the partial methods keep (default 1: keep all).
    #[arg(long)]
    pub p: Option<f64>,
    /// Convergence threshold on the whitened step residual.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Iteration cap.
    #[arg(long = "kmax")]
    pub k_max: Option<usize>,
    /// Seed for the Monte-Carlo path used on real-field scatter estimation.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output matrix file; a report lands next to it as `<out>.report.json`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Flags of the `anscm` subcommand.
#[derive(Debug, Args)]
pub struct AnscmArgs {
    /// Input matrix file (must be Hermitian positive definite).
    #[arg(long)]
    pub matrix: PathBuf,
    /// Evaluation method.
    #[arg(long, value_enum)]
    pub method: AnscmMethodArg,
    /// Monte-Carlo sample count (mc method only).
    #[arg(long = "mc-samples", default_value_t = 100_000)]
    pub mc_samples: usize,
    /// Monte-Carlo seed (mc method only).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output matrix file.
    #[arg(long)]
    pub out: PathBuf,
}

/// How `anscm` evaluates the expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnscmMethodArg {
    /// Eigenvalue closed form (complex input only).
    Closed,
    /// Monte-Carlo average.
    Mc,
}

/// Flags of the `calibrate` subcommand.
#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Target-free trials (at least 10 / pfa).
    #[arg(long)]
    pub trials: usize,
    /// Master seed override (default: the scenario's).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output threshold record (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

/// Flags of the `simulate` subcommand.
#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (JSON); must hash-match the threshold record.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Threshold record written by `calibrate`.
    #[arg(long)]
    pub threshold: PathBuf,
    /// Master seed override (default: the scenario's).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output curve (CSV).
    #[arg(long)]
    pub out: PathBuf,
}

/// Run the selected command, returning the process exit code.
pub fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Anscm(args) => cmd_anscm(&args),
        Command::Calibrate(args) => cmd_calibrate(&args),
        Command::Simulate(args) => cmd_simulate(&args),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn in_file(path: &Path, message: String) -> CliError {
    input_error(format!("{}: {message}", path.display()))
}

/// Sidecar report written next to every estimate.
#[derive(Debug, Serialize)]
struct EstimateReport<'a> {
    method: &'a str,
    iterations: usize,
    residual: f64,
    converged: bool,
    kept_indices: Option<&'a [usize]>,
}

fn run_estimate<S: Scalar>(
    kind: EstimatorKind,
    prior: Mat<S>,
    batch: &SampleBatch<S>,
    config: &EstimatorConfig,
    args: &EstimateArgs,
) -> Result<(EstimateResult<S>, String), CliError> {
    let prior = HpdMatrix::new(prior)
        .map_err(|e| in_file(&args.prior, format!("prior rejected: {e}")))?;
    let result = kind
        .run(&prior, batch, config)
        .map_err(|e| input_error(format!("estimation failed: {e}")))?;
    let report = EstimateReport {
        method: kind.name(),
        iterations: result.iterations,
        residual: result.final_residual,
        converged: result.converged,
        kept_indices: result.kept_indices.as_deref(),
    };
    let mut report_json =
        serde_json::to_string(&report).expect("report fields always serialize");
    report_json.push('\n');
    Ok((result, report_json))
}

fn cmd_estimate(args: &EstimateArgs) -> Result<i32, CliError> {
    let kind = args.method.kind();
    let mut config = args.method.config(args.alpha);
    if let Some(p) = args.p {
        config.p = p;
    }
    if let Some(eps) = args.eps {
        config.eps = eps;
    }
    if let Some(k_max) = args.k_max {
        config.k_max = k_max;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }

    let prior_text = read_file(&args.prior)?;
    let samples_text = read_file(&args.samples)?;
    let prior = parse_matrix(&prior_text).map_err(|m| in_file(&args.prior, m))?;
    let batch = parse_samples(&samples_text).map_err(|m| in_file(&args.samples, m))?;

    let (matrix_text, report_json, converged) = match (prior, batch) {
        (AnyMatrix::Real(p), AnyBatch::Real(b)) => {
            let (result, report) = run_estimate(kind, p, &b, &config, args)?;
            (emit_matrix_real(result.matrix.as_mat()), report, result.converged)
        }
        (AnyMatrix::Complex(p), AnyBatch::Complex(b)) => {
            let (result, report) = run_estimate(kind, p, &b, &config, args)?;
            (
                emit_matrix_complex(result.matrix.as_mat()),
                report,
                result.converged,
            )
        }
        (p, b) => {
            return Err(input_error(format!(
                "prior is {} but samples are {}; both files must declare the same field",
                p.field().label(),
                b.field().label()
            )))
        }
    };

    write_file(&args.out, &matrix_text)?;
    let report_path = PathBuf::from(format!("{}.report.json", args.out.display()));
    write_file(&report_path, &report_json)?;
    Ok(if converged { 0 } else { 2 })
}

fn cmd_anscm(args: &AnscmArgs) -> Result<i32, CliError> {
    let method = match args.method {
        AnscmMethodArg::Closed => AnscmMethod::ClosedForm,
        AnscmMethodArg::Mc => AnscmMethod::MonteCarlo {
            samples: args.mc_samples,
            seed: args.seed,
        },
    };
    let text = read_file(&args.matrix)?;
    let parsed = parse_matrix(&text).map_err(|m| in_file(&args.matrix, m))?;
    let out_text = match parsed {
        AnyMatrix::Real(m) => {
            let sigma = HpdMatrix::new(m)
                .map_err(|e| in_file(&args.matrix, format!("matrix rejected: {e}")))?;
            let out = anscm(&sigma, &method).map_err(|e| input_error(e.to_string()))?;
            emit_matrix_real(out.as_mat())
        }
        AnyMatrix::Complex(m) => {
            let sigma = HpdMatrix::new(m)
                .map_err(|e| in_file(&args.matrix, format!("matrix rejected: {e}")))?;
            let out = anscm(&sigma, &method).map_err(|e| input_error(e.to_string()))?;
            emit_matrix_complex(out.as_mat())
        }
    };
    write_file(&args.out, &out_text)?;
    Ok(0)
}

fn load_scenario(path: &Path) -> Result<(ScenarioSpec, ellcov::Scenario), CliError> {
    let text = read_file(path)?;
    let spec = ScenarioSpec::from_json(&text).map_err(|m| in_file(path, m))?;
    let scenario = spec.to_scenario().map_err(|m| in_file(path, m))?;
    Ok((spec, scenario))
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<i32, CliError> {
    let (spec, mut scenario) = load_scenario(&args.scenario)?;
    scenario.n_trials_pfa = args.trials;
    if let Some(seed) = args.seed {
        scenario.master_seed = seed;
    }
    // Calibration always runs on clean training data, even when the
    // scenario models contamination.
    let pool =
        StatePool::build(&scenario, false).map_err(|e| input_error(e.to_string()))?;
    let threshold =
        calibrate_threshold(&scenario, &pool).map_err(|e| input_error(e.to_string()))?;
    let record = ThresholdRecord {
        scenario_hash: spec.hash(),
        pfa: scenario.pfa,
        trials: args.trials,
        seed: scenario.master_seed,
        threshold,
    };
    write_file(&args.out, &record.to_json())?;
    Ok(0)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32, CliError> {
    let (spec, mut scenario) = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.master_seed = seed;
    }
    let record_text = read_file(&args.threshold)?;
    let record =
        ThresholdRecord::from_json(&record_text).map_err(|m| in_file(&args.threshold, m))?;
    let hash = spec.hash();
    if record.scenario_hash != hash {
        return Err(input_error(format!(
            "threshold record was calibrated for a different scenario \
             (its hash {} does not match this scenario's {hash})",
            record.scenario_hash
        )));
    }
    let pool = StatePool::build(&scenario, true).map_err(|e| input_error(e.to_string()))?;
    let curve = detection_curve(&scenario, &pool, record.threshold)
        .map_err(|e| input_error(e.to_string()))?;
    let mut csv = String::from("sinr_db,pd,trials,threshold\n");
    for point in &curve.points {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            point.sinr_db, point.pd, curve.trials_per_point, curve.threshold
        ));
    }
    write_file(&args.out, &csv)?;
    Ok(0)
}
