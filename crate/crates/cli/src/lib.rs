//! Command-line workflows over `aeckit`: generate scenarios, train and run the
//! baseline canceller, score outputs, and check pipeline compliance.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

mod args;
mod commands;
mod failure;
mod media;

pub use args::{Common, ComplyArgs, EnhanceArgs, EvaluateArgs, GenerateArgs, TrainArgs};
pub use failure::{Failure, EXIT_COMPLIANCE, EXIT_DATA, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "aeckit", version, about = "Acoustic echo cancellation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesise echo scenarios and write WAVs plus a JSONL manifest.
    Generate(GenerateArgs),
    /// Train the baseline mask model on a manifest.
    Train(TrainArgs),
    /// Run a trained model over a manifest or a single microphone/far-end pair.
    Enhance(EnhanceArgs),
    /// Score enhanced clips (ERLE, challenge metric, correlations).
    Evaluate(EvaluateArgs),
    /// Check a pipeline descriptor against the latency and RTF limits.
    Comply(ComplyArgs),
}

/// What a command hands back: human text, the JSON report, and where the
/// report goes (from `--report` or the config file).
#[derive(Debug)]
pub struct Outcome {
    pub summary: String,
    pub report: serde_json::Value,
    pub report_path: Option<PathBuf>,
}

pub fn execute(command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::Generate(a) => commands::generate::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Enhance(a) => commands::enhance::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
        Command::Comply(a) => commands::comply::run(a),
    }
}

fn write_report(path: &Path, report: &serde_json::Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Failure::Data(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Parses `args`, runs the command and returns the process exit code.
/// Human text goes to stdout, diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (outcome, code) = match execute(cli.command) {
        Ok(outcome) => (outcome, EXIT_OK),
        Err(Failure::Compliance(outcome)) => (*outcome, EXIT_COMPLIANCE),
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    println!("{}", outcome.summary);
    if let Some(path) = &outcome.report_path {
        if let Err(e) = write_report(path, &outcome.report) {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    }
    code
}
