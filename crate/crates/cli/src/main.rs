//! `ehdr`: corpus synthesis, training, inference and evaluation.
//!
//! Exit status is 0 on success, 1 on runtime failure and 2 on invalid
//! input or configuration.

mod error;
mod eval;
mod infer;
mod synth;
mod train;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ehdr_core::config::Config;

use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "ehdr", version, about = "Event-guided sharp HDR reconstruction from blurry LDR frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a training corpus from sharp frame sequences.
    Synth(synth::SynthArgs),
    /// Train the networks on a corpus.
    Train(train::TrainArgs),
    /// Reconstruct a sharp HDR sequence from one sample.
    Infer(infer::InferArgs),
    /// Score predictions, with or without references.
    Eval(eval::EvalArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// TOML config file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override a config value, e.g. `--set loss.l4=0`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    /// Defaults, then `base` (TOML text, if any), then the config file, then
    /// `--set` overrides.
    pub fn resolve(&self, base: Option<&Config>) -> CliResult<Config> {
        let text = match &self.config {
            Some(path) => Some(read_config(path)?),
            None => base.map(Config::to_toml),
        };
        Ok(Config::layered(text.as_deref(), &self.overrides)?)
    }
}

fn read_config(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| error::CliError::user(format!("cannot read config {}: {e}", path.display())))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth::run(&a),
        Command::Train(a) => train::run(&a),
        Command::Infer(a) => infer::run(&a),
        Command::Eval(a) => eval::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
