use std::process::ExitCode;

use clap::Parser;
use homotopy_svm::cli::{self, Cli};

fn main() -> ExitCode {
    cli::run(&Cli::parse())
}
