use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use lmg_metrology_cli::args::{Cli, Format};
use lmg_metrology_cli::{error_row, run, CliError, EXIT_INPUT};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("invalid arguments");
            eprint!(
                "{}",
                error_row(&CliError::Input(first.trim_start_matches("error: ").to_owned()), Format::Csv)
            );
            eprintln!();
            let _ = e.print();
            return ExitCode::from(EXIT_INPUT);
        }
    };
    ExitCode::from(run(&cli))
}
