use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use minmod_cli::description::Description;
use minmod_cli::pipeline::{run_pipeline, PipelineOptions, DEFAULT_TOLERANCE, DEFAULT_TRUNCATION};
use minmod_cli::suites::{default_trials, run_suite};

const EXIT_IO: u8 = 1;
const EXIT_SUITE_FAILURE: u8 = 4;

/// Classify structured operator descriptions and run property suites.
#[derive(Debug, Parser)]
#[command(name = "minmod", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify one operator description and write a JSON report.
    Classify {
        #[arg(long)]
        input: PathBuf,
        /// Report path; `-` writes to stdout.
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRUNCATION)]
        truncation: u64,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Include witness subspaces for NotAM verdicts.
        #[arg(long)]
        emit_witness: bool,
        /// Include wall-clock stage timings (makes the report non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Run a seeded property suite and print a JSON summary.
    Suite {
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to the suite's acceptance workload.
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn write_output(path: &PathBuf, text: &str) -> Result<(), ExitCode> {
    if path.as_os_str() == "-" {
        print!("{text}");
        return Ok(());
    }
    fs::write(path, text).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        ExitCode::from(EXIT_IO)
    })
}

fn classify(input: &PathBuf, report: &PathBuf, opts: PipelineOptions) -> Result<(), ExitCode> {
    let text = fs::read_to_string(input).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", input.display());
        ExitCode::from(EXIT_IO)
    })?;
    let fail = |e: minmod_cli::description::DescriptionError| {
        eprintln!("{}: {e}", input.display());
        ExitCode::from(e.exit_code() as u8)
    };
    let desc = Description::parse(&text).map_err(fail)?;
    let out = run_pipeline(&desc, &opts).map_err(fail)?;
    write_output(report, &out.to_json())
}

fn suite(name: &str, seed: u64, trials: Option<usize>) -> Result<(), ExitCode> {
    let trials = trials.or_else(|| default_trials(name)).unwrap_or(0);
    let outcome = run_suite(name, seed, trials).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })?;
    print!("{}", outcome.to_json());
    if outcome.success() {
        Ok(())
    } else {
        eprintln!(
            "suite {name}: {} of {} trials failed",
            outcome.failed, outcome.trials
        );
        Err(ExitCode::from(EXIT_SUITE_FAILURE))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Classify {
            input,
            report,
            truncation,
            tolerance,
            emit_witness,
            timing,
        } => classify(
            &input,
            &report,
            PipelineOptions {
                truncation,
                tolerance,
                emit_witness,
                timing,
            },
        ),
        Command::Suite { name, seed, trials } => suite(&name, seed, trials),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
