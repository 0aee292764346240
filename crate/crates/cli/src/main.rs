//! `xproc`: spectra, spectral profiles, exact and simulated correlations and
//! verification suites for symmetric exclusion processes.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use xproc_core::suite::SCHEMA_VERSION;

use config::{CliError, CliResult, Format, Options};

#[derive(Parser)]
#[command(
    name = "xproc",
    version,
    about = "Exact spectral analysis of symmetric exclusion processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Level eigenvalues and multiplicity groups.
    Spectrum(Options),
    /// Spectral profile of a function, or a sensitivity table with --n-grid.
    Profile(Options),
    /// Exact covariance and flip probability.
    Exact(Options),
    /// Monte Carlo estimates with standard errors.
    Simulate(Options),
    /// Run a verification suite; exits 1 on any violation.
    Verify(Options),
    /// Containment and monotonicity between --graph and --other-graph.
    Compare(Options),
}

impl Command {
    fn split(self) -> (&'static str, Options) {
        match self {
            Command::Spectrum(o) => ("spectrum", o),
            Command::Profile(o) => ("profile", o),
            Command::Exact(o) => ("exact", o),
            Command::Simulate(o) => ("simulate", o),
            Command::Verify(o) => ("verify", o),
            Command::Compare(o) => ("compare", o),
        }
    }
}

fn run(cli: Cli) -> CliResult<bool> {
    let (name, opts) = cli.command.split();
    let opts = opts.resolve()?;
    let cap = config::state_cap()?;
    let report = match name {
        "spectrum" => commands::spectrum(&opts, cap),
        "profile" => commands::profile(&opts, cap),
        "exact" => commands::exact(&opts, cap),
        "simulate" => commands::simulate(&opts, cap),
        "verify" => commands::verify(&opts, cap),
        _ => commands::compare(&opts, cap),
    }?;

    let mut echo = serde_json::to_value(&opts).expect("options serialize");
    echo["state_cap"] = json!(cap.0);
    let format = opts.format.unwrap_or(match name {
        "spectrum" | "profile" => Format::Csv,
        _ => Format::Json,
    });
    let text = match format {
        Format::Json => {
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "command": name,
                "config": echo,
                "result": report.result,
            });
            serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
        }
        Format::Csv => format!(
            "# xproc {name} schema_version={SCHEMA_VERSION}\n# config {echo}\n{}",
            report.csv
        ),
    };
    match &opts.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::config("out", format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    Ok(!report.failed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed; see the report for violated checks");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code)
        }
    }
}
