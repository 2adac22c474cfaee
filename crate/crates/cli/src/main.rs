mod args;
mod commands;
mod manifest;
mod table;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Exit 2 for input and schema errors, 3 when fitting fails.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Fit(anyhow::Error),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => commands::cmd_fit(a),
        Command::Classify(a) => commands::cmd_classify(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::Evaluate(a) => commands::cmd_evaluate(a),
        Command::Replay(a) => commands::cmd_replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Fit(e)) => {
            eprintln!("fit failed: {e:#}");
            ExitCode::from(3)
        }
    }
}
