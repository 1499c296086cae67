mod args;
mod cmd;
mod config;
mod error;
mod store;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use args::{Cli, Command};

fn main() -> std::process::ExitCode {
    let filter = EnvFilter::try_from_env("SLDX_LOG").unwrap_or_else(|_| EnvFilter::new("warn"));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();

    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest(a) => cmd::ingest::ingest(a),
        Command::Import(a) => cmd::ingest::import(a),
        Command::Run(a) => cmd::run::run(a),
        Command::Evaluate(a) => cmd::evaluate::evaluate(a),
        Command::Stats(a) => cmd::stats::stats(a),
        Command::Synth(a) => cmd::synth::synth(a),
        Command::Oracle(a) => cmd::oracle::oracle(a),
    };
    error::exit_code(result)
}
