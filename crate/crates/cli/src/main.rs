use std::process::ExitCode;

use clap::Parser;
use exact_euler_cli::{main_with, Cli};

fn main() -> ExitCode {
    ExitCode::from(main_with(Cli::parse()))
}
