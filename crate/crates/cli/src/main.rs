use std::process::ExitCode;

use clap::Parser;
use cowvad_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cowvad: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
