use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use repgap_cli::{exit, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(exit::IO as u8);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("repgap {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
