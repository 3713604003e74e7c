mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (table, failure) = match commands::run(&cli) {
        Ok(t) => (Some(t), None),
        Err((t, e)) => (t, Some(e)),
    };
    if let Some(t) = table {
        if let Err(e) = t.emit(cli.out.as_deref()) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match failure {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
