use std::process::ExitCode;

use clap::Parser;
use vidvib::cli::{resolve_threads, run, Cli};
use vidvib::error::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match start(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn start(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = resolve_threads(&cli)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    run(cli)
}
