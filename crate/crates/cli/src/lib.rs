//! Command-line front end for `curvkit`.
//!
//! Exit codes: 0 when the report passes, 1 when it fails, 2 on configuration
//! or I/O errors and 3 on numerical failures.

pub mod args;
mod commands;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use thiserror::Error;

pub use args::Cli;
pub use commands::{simulate_field, Outcome};
pub use report::{Report, REPORT_SCHEMA, REPORT_VERSION};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable that sets the worker pool size.
pub const THREADS_ENV: &str = "CURVKIT_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<curvkit::Error> for CliError {
    fn from(e: curvkit::Error) -> Self {
        use curvkit::Error as E;
        match e {
            E::Numerical(m) => CliError::Numerical(m),
            E::NonFinite(_) => CliError::Numerical(e.to_string()),
            E::Io(m) => CliError::Io(m),
            E::Config(m) => CliError::Config(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_PASS
            };
        }
    };
    let echo: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let result = configure_threads().and_then(|()| commands::execute(cli.command, echo));
    match result {
        Ok(Outcome::Report(report, out)) => match emit(&report, out.as_deref()) {
            Ok(()) if report.pass => EXIT_PASS,
            Ok(()) => EXIT_FAIL,
            Err(e) => {
                eprintln!("curvkit: {e}");
                e.exit_code()
            }
        },
        Ok(Outcome::Text(text)) => {
            print!("{text}");
            EXIT_PASS
        }
        Err(e) => {
            eprintln!("curvkit: {e}");
            e.exit_code()
        }
    }
}

fn emit(report: &Report, out: Option<&std::path::Path>) -> Result<(), CliError> {
    let json = report.to_json();
    match out {
        Some(path) => {
            std::fs::write(path, json)?;
            let failed: Vec<&str> = report
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.name.as_str())
                .collect();
            if failed.is_empty() {
                eprintln!("{}: pass ({} checks)", report.example, report.checks.len());
            } else {
                eprintln!("{}: FAIL ({})", report.example, failed.join(", "));
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(json.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}
