use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    henon_cli::run(henon_cli::Cli::parse())
}
