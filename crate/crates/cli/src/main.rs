use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lienard_cli::acceptance::{self, Context};
use lienard_cli::commands::{self, CommandError, EXIT_OK};
use lienard_cli::scenario::{parse_tolerance_override, TolerancesFile, TOLERANCE_ENV};
use lienard_core::lienard::Tolerances;

/// Liénard-type systems with kernel-weighted and Caputo derivatives.
///
/// Tolerances of `run`, `check` and `sweep` can be overridden with
/// LIENARD_TOLERANCES="rel=<r>,abs=<a>".
#[derive(Parser)]
#[command(name = "lienard", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario; writes trajectory.csv and report.json.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a theorem's hypotheses and probe its conclusion; prints JSON.
    Check {
        scenario: PathBuf,
        #[arg(long)]
        theorem: String,
    },
    /// Run a scenario for several values of one parameter, in parallel.
    Sweep {
        scenario: PathBuf,
        /// `alpha`, `kernel` or the name of a scenario constant.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Run the acceptance suite and print a pass/fail table.
    Selftest {
        /// Criterion numbers to run, all by default.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

fn fail(e: CommandError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn selftest(only: &[u8]) -> ExitCode {
    let tolerances = match std::env::var(TOLERANCE_ENV) {
        Ok(text) => {
            let d = Tolerances::default();
            match parse_tolerance_override(&text, TolerancesFile { rel: d.rel, abs: d.abs }) {
                Ok(t) => Some(t),
                Err(e) => return fail(e.into()),
            }
        }
        Err(_) => None,
    };
    let ctx = Context { tolerances };
    let mut all = true;
    let mut count = 0;
    for c in acceptance::CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let r = acceptance::run_criterion(c, &ctx);
        println!("{}", r.line());
        all &= r.passed;
        count += 1;
    }
    if count == 0 {
        eprintln!("error: no criteria selected");
        return ExitCode::from(2);
    }
    println!("{}", if all { "all criteria passed" } else { "some criteria FAILED" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out } => match commands::run(&scenario, &out) {
            Ok(report) => {
                eprintln!(
                    "{} samples, status {:?}, written to {}",
                    report.samples,
                    report.status,
                    out.display()
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Check { scenario, theorem } => match commands::check(&scenario, &theorem) {
            Ok(report) => match serde_json::to_string_pretty(&report) {
                Ok(json) => {
                    println!("{json}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(CommandError::Io(e.to_string())),
            },
            Err(e) => fail(e),
        },
        Command::Sweep {
            scenario,
            param,
            values,
            out,
        } => match commands::sweep(&scenario, &param, &values, &out) {
            Ok(outcome) => {
                for (row, dir) in outcome.rows.iter().zip(&outcome.dirs) {
                    eprintln!("{} = {}: {} ({})", param, row.value, row.status, dir.display());
                }
                let code = outcome.exit_code();
                if code == EXIT_OK {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(code as u8)
                }
            }
            Err(e) => fail(e),
        },
        Command::Selftest { only } => selftest(&only),
    }
}
