//! Command-line front end for `lmg-metrology`: grid scans, optimal-field and
//! robustness reports, bosonic large-N tables and the validation suite,
//! written as CSV or JSON.

use std::fmt;
use std::io::Write;
use std::path::Path;

pub mod args;
pub mod commands;
pub mod table;
pub mod validate;

use args::{Cli, Command, Format, OutputArgs};
use table::Table;

pub const EXIT_SUCCESS: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;

/// Errors that stop a command before any output is written.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numerical(m) => m,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

/// A finished table plus counts that decide the exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub table: Table,
    /// Rows whose evaluation failed numerically.
    pub failures: usize,
    /// Failed validation checks.
    pub validation_failures: usize,
}

impl Output {
    pub fn exit_code(&self) -> u8 {
        if self.validation_failures > 0 {
            EXIT_VALIDATION
        } else if self.failures > 0 {
            EXIT_NUMERICAL
        } else {
            EXIT_SUCCESS
        }
    }
}

fn output_args(command: &Command) -> &OutputArgs {
    match command {
        Command::Surface(a) => &a.output,
        Command::Optimal(a) => &a.output,
        Command::Robustness(a) => &a.output,
        Command::Thermo(a) => &a.output,
        Command::Validate(a) => &a.output,
    }
}

/// Evaluates a command on a pool of `--workers` threads without writing anything.
pub fn execute(command: &Command) -> Result<Output, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(output_args(command).workers)
        .build()
        .map_err(|e| CliError::Input(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match command {
        Command::Surface(a) => commands::surface(a),
        Command::Optimal(a) => commands::optimal(a),
        Command::Robustness(a) => commands::robustness(a),
        Command::Thermo(a) => commands::thermo(a),
        Command::Validate(a) => validate::validate(a),
    })
}

/// Machine-readable error row for standard error.
pub fn error_row(error: &CliError, format: Format) -> String {
    let mut t = Table::new(&["status", "kind", "message"]);
    t.push(vec!["error".into(), error.kind().into(), error.message().into()]);
    String::from_utf8(t.render(format)).expect("tables render as UTF-8")
}

fn write_output(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Input(format!("cannot write to standard output: {e}")))
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> u8 {
    let out = output_args(&cli.command);
    let result = execute(&cli.command).and_then(|output| {
        write_output(&output.table.render(out.format), out.out.as_deref())?;
        Ok(output.exit_code())
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprint!("{}", error_row(&e, out.format));
            e.exit_code()
        }
    }
}
