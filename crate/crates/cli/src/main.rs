//! `svi`: fit LDA and HDP topic models by stochastic variational inference,
//! then inspect and score them.
//!
//! Exit status is 0 on success, 2 for configuration errors and 3 for I/O
//! errors.

mod args;
mod commands;
mod config;
mod error;
mod model_file;
mod train;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Topics(a) => commands::topics(a),
        Command::Synth(a) => commands::synth(a),
        Command::Eval(a) => commands::eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("svi: {e}");
            e.exit_code()
        }
    }
}
