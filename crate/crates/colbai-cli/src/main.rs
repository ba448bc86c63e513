//! Experiment CLI: parse a JSON config, dispatch to the simulation library,
//! emit CSV or JSON.
//!
//! Subcommands: `run` (one experiment, per-trial + summary output), `sweep`
//! (Cartesian parameter grid, one summary row per point), `gen-instance`
//! (write an instance file), `validate-hard` (PASS/FAIL checks of the hard
//! distribution). Exit codes are a stable contract: 0 pass, 1 validation
//! failure, 2 configuration error, 3 runtime error.
//!
//! All randomness flows from one 64-bit master seed; `--seed` overrides the
//! config's. The CLI reads no environment variables.

mod sweep;

use clap::{Args, Parser, Subcommand, ValueEnum};
use colbai_core::bandit::Instance;
use colbai_core::hard::{sample_hard_instance, HardParams};
use colbai_core::harness::{csv, run_trials, ExperimentConfig, HarnessError};
use colbai_core::rng::trial_stream;
use colbai_core::validate::{validate_hard_distribution, CheckOutcome, ValidationOptions};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "colbai",
    version,
    about = "Collaborative best arm identification experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment: per-trial rows plus a summary row.
    Run(CommonArgs),
    /// Run a parameter grid: one summary row per grid point.
    Sweep(CommonArgs),
    /// Write an instance file (explicit or sampled hard instance).
    GenInstance(CommonArgs),
    /// Check the hard distribution's quantitative properties.
    ValidateHard(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed override; wins over the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread override for trial execution.
    #[arg(long)]
    workers: Option<usize>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Failures mapped onto the exit-code contract.
enum CliError {
    /// Exit 2: bad config file, bad schema, bad parameters.
    Config(String),
    /// Exit 3: the experiment itself failed.
    Runtime(String),
    /// Exit 1: a validate-hard check reported FAIL.
    ChecksFailed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::ChecksFailed => 1,
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => sweep::cmd_sweep(&args),
        Command::GenInstance(args) => cmd_gen_instance(&args),
        Command::ValidateHard(args) => cmd_validate_hard(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Config(msg) => eprintln!("config error: {msg}"),
                CliError::Runtime(msg) => eprintln!("runtime error: {msg}"),
                CliError::ChecksFailed => eprintln!("validation failed: see FAIL lines above"),
            }
            ExitCode::from(e.code())
        }
    }
}

fn read_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Library validation errors are configuration problems; everything else that
/// run_trials reports is a runtime failure.
fn map_harness_error(e: HarnessError) -> CliError {
    match e {
        HarnessError::InvalidConfig { .. } | HarnessError::UnsupportedSchema { .. } => {
            config_err(e)
        }
        other => CliError::Runtime(other.to_string()),
    }
}

fn apply_overrides(config: &mut ExperimentConfig, args: &CommonArgs) {
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
}

fn cmd_run(args: &CommonArgs) -> Result<(), CliError> {
    let mut config: ExperimentConfig = read_config(&args.config)?;
    apply_overrides(&mut config, args);
    config.validate().map_err(map_harness_error)?;
    let (outcomes, summary) = run_trials(&config).map_err(map_harness_error)?;
    let content = match args.format {
        Format::Csv => csv::render_run(&config, &outcomes, &summary),
        Format::Json => {
            let doc = serde_json::json!({
                "experiment_id": config.experiment_id,
                "master_seed": config.seed,
                "trials": outcomes,
                "summary": summary,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            s
        }
    };
    write_output(&args.out, &content)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenConfig {
    schema: u32,
    kind: GenKind,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum GenKind {
    /// Validate and echo an explicit instance.
    Explicit { instance: Instance },
    /// Sample a hard instance from the seed.
    Hard { params: HardParams },
}

fn cmd_gen_instance(args: &CommonArgs) -> Result<(), CliError> {
    let config: GenConfig = read_config(&args.config)?;
    if config.schema != 1 {
        return Err(CliError::Config(format!(
            "unsupported config schema {}, expected 1",
            config.schema
        )));
    }
    let seed = args.seed.unwrap_or(config.seed);
    // The instance file schema has no seed slot (means and bits are the
    // content); report the seed on stderr instead.
    eprintln!("# master_seed={seed}");
    let json = match config.kind {
        GenKind::Explicit { instance } => {
            serde_json::to_string_pretty(&instance).expect("serializable")
        }
        GenKind::Hard { params } => {
            let mut rng = trial_stream(seed, 0);
            let hi = sample_hard_instance(&params, &mut rng);
            serde_json::to_string_pretty(&hi).expect("serializable")
        }
    };
    write_output(&args.out, &format!("{json}\n"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateConfig {
    schema: u32,
    params: HardParams,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    options: Option<ValidationOptions>,
}

fn render_checks_text(seed: u64, checks: &[CheckOutcome]) -> String {
    let mut out = String::new();
    writeln!(out, "# master_seed={seed}").unwrap();
    for c in checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{tag} {}: {}", c.name, c.detail).unwrap();
    }
    out
}

fn cmd_validate_hard(args: &CommonArgs) -> Result<(), CliError> {
    let config: ValidateConfig = read_config(&args.config)?;
    if config.schema != 1 {
        return Err(CliError::Config(format!(
            "unsupported config schema {}, expected 1",
            config.schema
        )));
    }
    let seed = args.seed.unwrap_or(config.seed);
    let options = config.options.unwrap_or_default();
    let checks = validate_hard_distribution(&config.params, &options, seed);
    let content = match args.format {
        Format::Csv => render_checks_text(seed, &checks),
        Format::Json => {
            let doc = serde_json::json!({
                "master_seed": seed,
                "checks": checks,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            s
        }
    };
    write_output(&args.out, &content)?;
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(CliError::ChecksFailed)
    }
}
