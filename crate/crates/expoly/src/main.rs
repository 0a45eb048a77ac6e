use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    ExitCode::from(expoly::run(expoly::Cli::parse()))
}
