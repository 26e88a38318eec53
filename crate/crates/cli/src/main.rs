use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use envlab_cli::config::{DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV};
use envlab_cli::error::EXIT_PREMISE_FAILURE;
use envlab_cli::tools::{compare, tomo, TomoMethod};
use envlab_cli::{
    parse_noise, parse_weights, run_experiment, run_prover, CliError, Execution, ReportFormat,
    RunConfig,
};
use envlab_core::analysis::premises::DEFAULT_RESAMPLES;
use envlab_core::{ExperimentKind, NoiseModel};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "envlab",
    version,
    about = "Simulated envariance experiments and exact probability proofs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputDir {
    /// Directory for all written files.
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = DEFAULT_OUTPUT_DIR)]
    output_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one experiment and write counts, densities and the premise report.
    Run {
        #[arg(long, value_parser = parse_kind)]
        experiment: ExperimentKind,
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        /// none | shot | shot+jitter=<rad>
        #[arg(long, default_value = "shot", value_parser = parse_noise_arg)]
        noise: NoiseModel,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
        resamples: usize,
        /// Comma-separated subset of json, csv, text.
        #[arg(long, default_value = "json,csv", value_delimiter = ',', value_parser = parse_format)]
        format: Vec<ReportFormat>,
        /// Run acquisitions one after another instead of in parallel.
        #[arg(long)]
        serial: bool,
        #[command(flatten)]
        out: OutputDir,
    },
    /// Derive and verify probabilities for rational squared amplitudes, e.g. `2/3 1/3`.
    Prove {
        #[arg(required = true, allow_negative_numbers = true)]
        weights: Vec<String>,
        #[command(flatten)]
        out: OutputDir,
    },
    /// Reconstruct a density matrix from a CountTable CSV.
    Tomo {
        csv: PathBuf,
        /// li | li-clip | mle
        #[arg(long, default_value = "mle")]
        method: String,
        /// Write the JSON here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Bhattacharyya coefficient between two CountTable CSVs.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
        resamples: usize,
    },
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    s.parse().map_err(|e: envlab_core::Error| e.to_string())
}

fn parse_noise_arg(s: &str) -> Result<NoiseModel, String> {
    parse_noise(s).map_err(|e| e.to_string())
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn paths(files: &[PathBuf]) -> Vec<String> {
    files.iter().map(|p| p.display().to_string()).collect()
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Run {
            experiment,
            shots,
            noise,
            seed,
            resamples,
            format,
            serial,
            out,
        } => {
            let config = RunConfig {
                experiment,
                shots_per_setting: shots,
                noise,
                seed,
                resamples,
                output_dir: out.output_dir,
                report_formats: format.into_iter().collect::<BTreeSet<_>>(),
            };
            let execution = if serial {
                Execution::Serial
            } else {
                Execution::Parallel
            };
            let outcome = run_experiment(&config, execution)?;
            let summary = json!({
                "experiment": experiment,
                "passed": outcome.passed(),
                "verdicts": outcome.report.verdicts,
                "b_premise1": outcome.report.b_premise1,
                "files": paths(&outcome.files),
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(if outcome.passed() {
                0
            } else {
                EXIT_PREMISE_FAILURE
            })
        }
        Command::Prove { weights, out } => {
            let weights = parse_weights(&weights)?;
            let outcome = run_prover(&weights, &out.output_dir)?;
            let conclusion: serde_json::Map<String, serde_json::Value> = outcome
                .chain
                .conclusion
                .iter()
                .map(|(k, v)| (k.clone(), v.to_string().into()))
                .collect();
            let summary = json!({
                "verified": true,
                "conclusion": conclusion,
                "steps": outcome.chain.steps.len(),
                "files": paths(&outcome.files),
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(0)
        }
        Command::Tomo {
            csv,
            method,
            output,
        } => {
            let doc = tomo(&csv, method.parse::<TomoMethod>()?)?;
            let text = serde_json::to_string_pretty(&doc)? + "\n";
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Compare {
            a,
            b,
            seed,
            resamples,
        } => {
            let c = compare(&a, &b, resamples, seed)?;
            println!("{}", serde_json::to_string_pretty(&c)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Config(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
