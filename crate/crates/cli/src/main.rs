use std::process::ExitCode;

use clap::Parser;
use ratingdml_cli::{configure_workers, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_workers().and_then(|()| run(cli));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.text);
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                for p in &outcome.problems {
                    eprintln!("check failed: {p}");
                }
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
