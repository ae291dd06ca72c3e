use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;

use ajparse_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut err = io::stderr();
    match run(cli, &mut out, &mut err) {
        Ok(outcome) => {
            let _ = writeln!(out, "{outcome}");
            if outcome.fail == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            ExitCode::from(2)
        }
    }
}
